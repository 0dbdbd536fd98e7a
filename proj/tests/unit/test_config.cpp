#include <gtest/gtest.h>

#include "forge/config.hpp"
#include "forge/codec.hpp"
#include "support/oracles.hpp"

using namespace forge;

namespace {

ErrorCode code_of(const std::function<void()>& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.code();
    }
    ADD_FAILURE() << "no error thrown";
    return ErrorCode::InvalidArgument;
}

const ClientEndpoint& endpoint(const Config& c, ClientKind kind) {
    for (const auto& e : c.endpoints)
        if (e.kind == kind) return e;
    throw std::runtime_error("missing endpoint");
}

}  // namespace

TEST(Config, Defaults) {
    const Config c = default_config();
    EXPECT_EQ(c.seed, 0u);
    EXPECT_EQ(c.jobs, 1u);
    EXPECT_DOUBLE_EQ(c.thresholds.depth, 0.15);
    EXPECT_DOUBLE_EQ(c.thresholds.xy, 0.05);
    EXPECT_DOUBLE_EQ(c.compose.guidance_scale, 9.0);
    EXPECT_EQ(c.compose.mask_level, 3);
    ASSERT_EQ(c.endpoints.size(), std::size(kAllClientKinds));
    for (const auto& e : c.endpoints) EXPECT_EQ(e.transport_name(), "mock");
    EXPECT_EQ(parse_config("").seed, c.seed);
}

TEST(Config, ParsesToml) {
    const Config c = parse_config(R"(
seed = 7
jobs = 4

[relations]
depth_threshold = 0.2
xy_threshold = 0.1

[compose]
lambda = 0.5
guidance_scale = 5.0
mask_level = 2
target_resolution = 256

[backends.depth]
transport = "http"
url = "http://127.0.0.1:9000"
timeout = 12.5

[backends.composite]
transport = "subprocess"
command = "forge mock-backend"

[serve]
port = 9999
studio_dir = "web"
)");
    EXPECT_EQ(c.seed, 7u);
    EXPECT_EQ(c.jobs, 4u);
    EXPECT_DOUBLE_EQ(c.thresholds.depth, 0.2);
    EXPECT_DOUBLE_EQ(c.thresholds.xy, 0.1);
    EXPECT_DOUBLE_EQ(c.compose.lambda, 0.5);
    EXPECT_DOUBLE_EQ(c.compose.guidance_scale, 5.0);
    EXPECT_EQ(c.compose.mask_level, 2);
    EXPECT_EQ(c.compose.target_resolution, 256u);
    EXPECT_EQ(c.port, 9999);
    EXPECT_EQ(c.studio_dir, "web");
    const ClientEndpoint& d = endpoint(c, ClientKind::depth);
    EXPECT_EQ(std::get<HttpTransport>(d.transport).base_url, "http://127.0.0.1:9000");
    EXPECT_DOUBLE_EQ(d.timeout_s, 12.5);
    EXPECT_EQ(std::get<SubprocessTransport>(endpoint(c, ClientKind::composite).transport).command, "forge mock-backend");
    EXPECT_EQ(endpoint(c, ClientKind::locate).transport_name(), "mock");
    EXPECT_EQ(describe_endpoints(c).size(), std::size(kAllClientKinds));
}

TEST(Config, EnvironmentOverridesBackend) {
    const Config c = parse_config("[backends.depth]\ntransport = \"mock\"\n",
                                  Environment{{"FORGE_BACKEND_DEPTH_URL", "http://10.0.0.1:8000"},
                                              {"FORGE_BACKEND_LOCATE_URL", ""}});
    EXPECT_EQ(std::get<HttpTransport>(endpoint(c, ClientKind::depth).transport).base_url, "http://10.0.0.1:8000");
    EXPECT_EQ(endpoint(c, ClientKind::locate).transport_name(), "mock");
}

TEST(Config, ValidationErrors) {
    EXPECT_EQ(code_of([] { parse_config("seed = "); }), ErrorCode::InvalidArgument);
    EXPECT_EQ(code_of([] { parse_config("seed = \"seven\""); }), ErrorCode::InvalidArgument);
    EXPECT_EQ(code_of([] { parse_config("seed = -1"); }), ErrorCode::InvalidArgument);
    EXPECT_EQ(code_of([] { parse_config("[backends.depth]\ntransport = \"http\"\n"); }), ErrorCode::InvalidArgument);
    EXPECT_EQ(code_of([] { parse_config("[backends.depth]\ntransport = \"carrier-pigeon\"\n"); }),
              ErrorCode::InvalidArgument);
    EXPECT_EQ(code_of([] { parse_config("[backends.depth]\ntransport = \"http\"\nurl = \"x\"\ncommand = \"y\"\n"); }),
              ErrorCode::InvalidArgument);
    EXPECT_EQ(code_of([] { parse_config("[backends.depth]\ntransport = \"mock\"\ntimeout = 0\n"); }),
              ErrorCode::InvalidArgument);
}

TEST(Config, LoadFromFile) {
    oracle::TempDir dir;
    write_text(dir / "forge.toml", "seed = 42\n");
    EXPECT_EQ(load_config(dir / "forge.toml", {}).seed, 42u);
    EXPECT_EQ(load_config(std::nullopt, {}).seed, 0u);
    EXPECT_EQ(code_of([&] { load_config(dir / "absent.toml", {}); }), ErrorCode::IoFailure);
}
