#include <gtest/gtest.h>

#include "forge/codec.hpp"
#include "forge/pipeline.hpp"
#include "forge/service.hpp"
#include "support/oracles.hpp"

using namespace forge;
namespace fs = std::filesystem;

namespace {

oracle::CommandResult forge_cli(const std::string& args) {
    return oracle::run(std::string("'") + FORGE_CLI_PATH + "' " + args);
}

}  // namespace

TEST(Cli, HelpListsCommandsAndFlags) {
    const auto top = forge_cli("--help");
    EXPECT_EQ(top.status, 0);
    for (const char* cmd : {"build-dataset", "fuse-depth", "detail-map", "collage", "augment-mask", "compose", "eval-mllm",
                            "serve", "sample-video-pair", "verify", "--seed", "--config", "--jobs"}) {
        EXPECT_NE(top.output.find(cmd), std::string::npos) << cmd;
    }
    const auto fuse = forge_cli("fuse-depth --help");
    EXPECT_EQ(fuse.status, 0);
    for (const char* flag : {"--bg-depth", "--obj-depth", "--obj-mask", "--bbox", "--depth", "--mode", "--alpha", "--out"}) {
        EXPECT_NE(fuse.output.find(flag), std::string::npos) << flag;
    }
    const auto compose = forge_cli("compose --help");
    for (const char* flag : {"--background", "--reference", "--instruction", "--bbox", "--mask-level", "--lambda",
                             "--guidance-scale", "--occlusion"}) {
        EXPECT_NE(compose.output.find(flag), std::string::npos) << flag;
    }
}

TEST(Cli, ExitCodes) {
    EXPECT_NE(forge_cli("fuse-depth").status, 0);          // missing required flags
    EXPECT_NE(forge_cli("no-such-command").status, 0);
    oracle::TempDir dir;
    // Typed failures exit with 2.
    const auto missing = forge_cli("augment-mask --mask " + oracle::quote(dir / "absent.png") + " --out " + oracle::quote(dir / "o"));
    EXPECT_EQ(missing.status, 2);
    EXPECT_NE(missing.output.find("IoFailure"), std::string::npos) << missing.output;
}

TEST(Cli, AugmentMaskAndVerify) {
    oracle::TempDir dir;
    Mask m(40, 30);
    for (int y = 10; y < 20; ++y)
        for (int x = 8; x < 30; ++x) m.set(x, y, true);
    write_mask_png(m, dir / "m.png");
    const auto all = forge_cli("augment-mask --mask " + oracle::quote(dir / "m.png") + " --out " + oracle::quote(dir / "ladder"));
    ASSERT_EQ(all.status, 0) << all.output;
    for (int k = 1; k <= 5; ++k) EXPECT_TRUE(fs::exists(dir / "ladder" / ("mask_level" + std::to_string(k) + ".png")));
    EXPECT_EQ(forge_cli("verify " + oracle::quote(dir / "ladder")).status, 0);

    write_text(dir / "ladder" / "mask_level1.png", "tampered");
    const auto bad = forge_cli("verify " + oracle::quote(dir / "ladder"));
    EXPECT_EQ(bad.status, 1);
    EXPECT_NE(bad.output.find("MISMATCH mask_level1.png"), std::string::npos);

    const auto one = forge_cli("augment-mask --level 4 --mask " + oracle::quote(dir / "m.png") + " --out " + oracle::quote(dir / "l4.png"));
    ASSERT_EQ(one.status, 0) << one.output;
    EXPECT_TRUE(fs::exists(dir / "l4.png"));
    EXPECT_TRUE(fs::exists(dir / "l4.png.manifest.json"));
    EXPECT_EQ(forge_cli("verify " + oracle::quote(dir / "l4.png")).status, 0);
}

TEST(Cli, ServeReportsPortInUse) {
    Config c = default_config();
    c.port = 0;
    c.studio_dir = "";
    Service held(c);
    const int port = held.bind();
    const auto r = oracle::run(std::string("timeout 10 '") + FORGE_CLI_PATH + "' serve --host 127.0.0.1 --port " + std::to_string(port));
    EXPECT_EQ(r.status, 3) << r.output;
    EXPECT_NE(r.output.find("PortInUse"), std::string::npos) << r.output;
}

TEST(Cli, EvalWritesReportFile) {
    oracle::TempDir dir;
    ASSERT_EQ(forge_cli("make-fixtures --images 4 --out " + oracle::quote(dir / "fx")).status, 0);
    const fs::path coco = dir / "fx" / "coco_mini";
    const auto ds = forge_cli("build-dataset --coco " + oracle::quote(coco / "annotations.json") + " --depth-dir " +
                              oracle::quote(coco / "depth") + " --n 8 --out " + oracle::quote(dir / "ds"));
    ASSERT_EQ(ds.status, 0) << ds.output;
    const auto ev = forge_cli("eval-mllm --dataset " + oracle::quote(dir / "ds" / "records.jsonl") + " --out " +
                              oracle::quote(dir / "report.json"));
    ASSERT_EQ(ev.status, 0) << ev.output;
    ASSERT_TRUE(fs::is_regular_file(dir / "report.json"));
    const Bytes raw = read_file(dir / "report.json");
    EXPECT_EQ(nlohmann::json::parse(raw.begin(), raw.end())["n"], 8);
    EXPECT_EQ(forge_cli("verify " + oracle::quote(dir / "report.json")).status, 0);
}
