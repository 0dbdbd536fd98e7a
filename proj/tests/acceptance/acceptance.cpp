// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any failure.
//
//   forge_acceptance --forge path/to/forge

#include <chrono>
#include <cmath>
#include <cstring>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <sstream>
#include <string>

#include <httplib.h>

#include "forge/codec.hpp"
#include "forge/commands.hpp"
#include "forge/conditioning.hpp"
#include "forge/dataset.hpp"
#include "forge/depth_fusion.hpp"
#include "forge/detail_mask.hpp"
#include "forge/geometry.hpp"
#include "forge/pipeline.hpp"
#include "forge/service.hpp"
#include "support/scenes.hpp"

using namespace forge;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string g_forge;

struct Outcome {
    bool ok = true;
    std::ostringstream notes;

    void expect(bool cond, const std::string& what) {
        if (!cond && ok) notes << "first failure: " << what << "; ";
        ok = ok && cond;
    }
};

using Clock = std::chrono::steady_clock;
double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(double v) {
    std::ostringstream s;
    s.precision(4);
    s << v;
    return s.str();
}

oracle::CommandResult cli(const std::string& args) { return oracle::run(oracle::quote(g_forge) + " " + args); }

// ---------------------------------------------------------------------------

void check_iou_oracle(Outcome& o) {
    const auto t0 = Clock::now();
    const BBox a = BBox::make(0, 0, 0.2, 0.2);
    o.expect(iou(a, a) == 1.0, "identical boxes give 1");
    o.expect(iou(a, BBox::make(0.5, 0.5, 0.9, 0.9)) == 0.0, "disjoint boxes give 0");
    o.expect(std::abs(iou(a, BBox::make(0.1, 0.1, 0.3, 0.3)) - 1.0 / 7.0) < 1e-15, "quarter overlap gives 1/7");

    std::mt19937_64 rng(20240601);
    auto grid_box = [&] {
        int x1 = rng() % 1001, x2 = rng() % 1001, y1 = rng() % 1001, y2 = rng() % 1001;
        while (x1 == x2) x2 = rng() % 1001;
        while (y1 == y2) y2 = rng() % 1001;
        return BBox::make(std::min(x1, x2) / 1000.0, std::min(y1, y2) / 1000.0, std::max(x1, x2) / 1000.0,
                          std::max(y1, y2) / 1000.0);
    };
    double worst = 0.0;
    for (int i = 0; i < 100; ++i) {
        const BBox p = grid_box(), q = grid_box();
        worst = std::max(worst, std::abs(iou(p, q) - oracle::raster_iou(p, q)));
    }
    const double dt = seconds_since(t0);
    o.expect(worst <= 1e-3, "raster oracle deviation " + fmt(worst));
    o.expect(dt < 5.0, "runtime " + fmt(dt) + " s");
    o.notes << "100 pairs, max |iou - raster| = " << fmt(worst) << ", " << fmt(dt) << " s";
}

void check_depth_fusion(Outcome& o) {
    const auto t0 = Clock::now();
    std::mt19937_64 rng(77);
    std::size_t centers_checked = 0;
    for (int s = 0; s < 50; ++s) {
        FusionRequest req = scenes::random_fusion_request(rng, FusionMode::place);
        req.occlusion = OcclusionRule::nearest_wins;
        const std::uint32_t w = req.bg_depth.width(), h = req.bg_depth.height();
        const PixelRect rect = req.location.bbox.to_pixels(w, h);
        const FusionResult placed = fuse(req);
        FusionRequest rep = req;
        rep.mode = FusionMode::replace;
        const FusionResult replaced = fuse(rep);

        for (std::uint32_t y = 0; y < h; ++y) {
            for (std::uint32_t x = 0; x < w; ++x) {
                const bool in = int(x) >= rect.x0 && int(x) < rect.x1 && int(y) >= rect.y0 && int(y) < rect.y1;
                const float bg = req.bg_depth.at(x, y);
                if (!in) {
                    const float p = placed.fused_depth.at(x, y), r = replaced.fused_depth.at(x, y);
                    o.expect(std::memcmp(&bg, &p, sizeof bg) == 0, "place changed a pixel outside the box");
                    o.expect(std::memcmp(&bg, &r, sizeof bg) == 0, "replace changed a pixel outside the box");
                    continue;
                }
                if (placed.placed_obj_mask.on(x, y)) {
                    o.expect(placed.fused_depth.at(x, y) >= bg, "nearest_wins went behind the background");
                    o.expect(replaced.fused_depth.at(x, y) > 0.0f, "replace zeroed an object pixel");
                } else {
                    o.expect(replaced.fused_depth.at(x, y) == 0.0f, "replace kept a non-object box pixel");
                }
            }
        }
        const PixelRect b = *placed.placed_obj_mask.bounds();
        const int cx = b.center_x(), cy = b.center_y();
        if (placed.placed_obj_mask.on(cx, cy) && req.bg_depth.at(cx, cy) <= req.location.depth) {
            ++centers_checked;
            o.expect(std::abs(placed.fused_depth.at(cx, cy) - req.location.depth) <= 1e-6, "placed center is not at the target depth");
        }
    }
    const double dt = seconds_since(t0);
    o.expect(centers_checked >= 25, "only " + std::to_string(centers_checked) + " unoccluded centers");
    o.expect(dt < 10.0, "runtime " + fmt(dt) + " s");
    o.notes << "50 scenes, " << centers_checked << " unoccluded centers checked, " << fmt(dt) << " s";
}

void check_detail_map(Outcome& o) {
    std::mt19937_64 rng(5);
    auto full = [](std::uint32_t w, std::uint32_t h) { return Mask::from_rect(w, h, PixelRect{0, 0, int(w), int(h)}); };

    for (std::uint8_t v : {0, 17, 128, 255}) {
        const HFMap hf = hf_extract(Image(23, 17, 3, v), full(23, 17));
        for (float x : hf.raster.samples()) o.expect(x == 0.0f, "constant image gave a response");
    }
    for (int i = 0; i < 20; ++i) {
        const std::uint32_t w = 8 + rng() % 40, h = 8 + rng() % 40;
        const Image img = oracle::random_image(rng, w, h);
        const Mask m = oracle::random_blob(rng, w, h);
        const HFMap hf = hf_extract(img, m);
        const auto want = oracle::sobel_detail(img, m);
        for (std::uint32_t y = 0; y < h; ++y) {
            for (std::uint32_t x = 0; x < w; ++x) {
                const float got = hf.raster.at(x, y);
                if (!m.on(x, y)) o.expect(std::signbit(got) == false && got == 0.0f, "response outside the mask");
                o.expect(std::abs(got - want[std::size_t(y) * w + x]) <= 1e-6, "Sobel oracle mismatch");
            }
        }
    }
    Image step(16, 8, 3, 40);
    for (std::uint32_t y = 0; y < 8; ++y)
        for (std::uint32_t x = 9; x < 16; ++x)
            for (int c = 0; c < 3; ++c) step.at(x, y, c) = 200;
    const HFMap hs = hf_extract(step, full(16, 8));
    for (std::uint32_t y = 0; y < 8; ++y)
        for (std::uint32_t x = 0; x < 16; ++x) o.expect((hs.raster.at(x, y) > 0.0f) == (x == 8 || x == 9), "step response off the edge columns");

    for (int i = 0; i < 20; ++i) {
        const std::uint32_t w = 10 + rng() % 30, h = 10 + rng() % 30;
        Image img(w, h, 3);
        for (auto& v : img.samples()) v = static_cast<std::uint8_t>(30 + rng() % 171);
        Image shifted = img;
        for (auto& v : shifted.samples()) v = static_cast<std::uint8_t>(v + 20);
        const Mask m = oracle::random_blob(rng, w, h);
        const HFMap a = hf_extract(img, m), b = hf_extract(shifted, m);
        for (std::size_t k = 0; k < a.raster.sample_count(); ++k) {
            o.expect(std::abs(a.raster.samples()[k] - b.raster.samples()[k]) <= 1e-6, "brightness shift changed the map");
        }
    }
    o.notes << "constant, masked-zero, step-edge, brightness-shift and Sobel-oracle checks";
}

void check_mask_ladder(Outcome& o) {
    std::mt19937_64 rng(11);
    for (int i = 0; i < 200; ++i) {
        const std::uint32_t w = 20 + rng() % 80, h = 20 + rng() % 80;
        const auto ladder = mask_ladder(oracle::random_blob(rng, w, h));
        for (int k = 1; k < 5; ++k) o.expect(oracle::contains(ladder[k], ladder[k - 1]), "level " + std::to_string(k + 1) + " does not contain level " + std::to_string(k));
        const PixelRect b = *ladder[4].bounds();
        o.expect(ladder[4].count() == std::size_t(b.width()) * b.height(), "level 5 is not a filled rectangle");
    }
    o.notes << "200 random blobs";
}

void check_guidance(Outcome& o) {
    std::mt19937_64 rng(3);
    std::normal_distribution<double> N(0.0, 1.0);
    double worst = 0.0;
    for (int i = 0; i < 50; ++i) {
        const std::size_t n = 1 + rng() % 64;
        NdArray uc{{n}, {}}, c{{n}, {}};
        for (std::size_t k = 0; k < n; ++k) {
            uc.data.push_back(N(rng));
            c.data.push_back(N(rng));
        }
        const NdArray one = cfg_combine(GuidanceArrays{uc, c, 1.0});
        const NdArray zero = cfg_combine(GuidanceArrays{uc, c, 0.0});
        const double s1 = 10 * N(rng), s2 = 10 * N(rng);
        const NdArray f1 = cfg_combine(GuidanceArrays{uc, c, s1});
        const NdArray f2 = cfg_combine(GuidanceArrays{uc, c, s2});
        const NdArray mid = cfg_combine(GuidanceArrays{uc, c, 0.5 * (s1 + s2)});
        for (std::size_t k = 0; k < n; ++k) {
            o.expect(std::abs(one.data[k] - c.data[k]) <= 1e-12, "s=1 differs from the conditional output");
            o.expect(std::abs(zero.data[k] - uc.data[k]) <= 1e-12, "s=0 differs from the unconditional output");
            const double lin = std::abs(f1.data[k] + f2.data[k] - 2 * mid.data[k]);
            const double ref = std::abs(f1.data[k] - (uc.data[k] + s1 * (c.data[k] - uc.data[k])));
            worst = std::max({worst, lin, ref});
        }
    }
    o.expect(worst <= 1e-9, "linearity deviation " + fmt(worst));
    o.notes << "50 random arrays, max linearity deviation " << fmt(worst);
}

void check_drop_rates(Outcome& o) {
    const DropProbabilities p{0.5, 0.3};
    std::size_t id = 0, detail = 0, depth = 0;
    constexpr std::size_t n = 10000;
    for (std::uint64_t i = 0; i < n; ++i) {
        const DroppedConditions d = draw_drops(i, p, 2024);
        id += d.id;
        detail += d.detail;
        depth += d.depth;
    }
    const double rid = double(id) / n, rdet = double(detail) / n, rdep = double(depth) / n;
    o.expect(std::abs(rid - 0.5) <= 0.02, "id rate " + fmt(rid));
    o.expect(std::abs(rdet - 0.3) <= 0.02, "detail rate " + fmt(rdet));
    o.expect(std::abs(rdep - 0.3) <= 0.02, "depth rate " + fmt(rdep));
    o.notes << "rates id " << fmt(rid) << ", detail " << fmt(rdet) << ", depth " << fmt(rdep);
}

void check_closed_loop(Outcome& o) {
    oracle::TempDir fx, ds;
    write_coco_fixture(fx.path, 20, 1);
    const CocoSource src = load_coco(fx / "annotations.json", fx / "depth");
    ClientSet mocks = mock_clients();
    DatasetOptions opt;
    opt.n = 120;
    opt.seed = 7;
    opt.jobs = 4;
    const DatasetSummary summary = build_dataset(src, opt, *mocks.inpaint, ds.path);
    o.expect(summary.records >= 100, "only " + std::to_string(summary.records) + " records");

    const auto records = read_records(ds / "records.jsonl");
    std::map<std::string, const SceneAnnotation*> by_image;
    for (const SceneAnnotation& s : src.scenes) by_image[s.image_ref] = &s;
    std::size_t exact = 0;
    for (const DatasetRecord& r : records) {
        const auto it = by_image.find(r.source_image);
        if (it == by_image.end()) {
            o.expect(false, "record names an unknown source image");
            continue;
        }
        const Instance* inst = it->second->find_by_id(r.target_instance);
        o.expect(inst != nullptr, "record names an unknown instance");
        if (inst != nullptr && iou(r.answer.bbox, inst->bbox) == 1.0) ++exact;
    }
    o.expect(exact == records.size(), "ground truth IoU below 1 for " + std::to_string(records.size() - exact) + " records");

    EvalOptions eo;
    eo.jobs = 4;
    const json report = run_eval(ds / "records.jsonl", mocks, eo);
    const double rate = report["relation_satisfaction"].get<double>();
    o.expect(rate == 1.0, "relation satisfaction " + fmt(rate));
    o.notes << records.size() << " records, relations satisfied " << report["relations_satisfied"] << "/"
            << report["relations_total"] << ", ground-truth IoU 1.0 for " << exact;
}

struct VisibleCheck {
    std::size_t visible = 0, occluded = 0, mismatched = 0;
    std::vector<bool> hidden;  // placed but failing the depth test
};

// Visible object pixels are those that change when the reference changes.
VisibleCheck visible_set(const ConditioningBundle& bundle) {
    ConditioningBundle b = bundle;
    b.reference_crop = Image(b.reference_crop.width(), b.reference_crop.height(), b.reference_crop.channels(), 10);
    const Image dark = mock_composite(b);
    b.reference_crop = Image(b.reference_crop.width(), b.reference_crop.height(), b.reference_crop.channels(), 240);
    const Image light = mock_composite(b);
    VisibleCheck v;
    v.hidden.assign(std::size_t(dark.width()) * dark.height(), false);
    for (std::uint32_t y = 0; y < dark.height(); ++y) {
        for (std::uint32_t x = 0; x < dark.width(); ++x) {
            bool differs = false;
            for (std::uint32_t c = 0; c < dark.channels(); ++c) differs = differs || dark.at(x, y, c) != light.at(x, y, c);
            const bool placed = b.placed_mask.on(x, y);
            const bool want = placed && b.object_depth.at(x, y) >= b.fused_depth.at(x, y);
            v.visible += want;
            v.occluded += placed && !want;
            v.hidden[std::size_t(y) * dark.width() + x] = placed && !want;
            v.mismatched += differs != want;
        }
    }
    return v;
}

void check_occlusion_compose(Outcome& o) {
    oracle::TempDir fx, out;
    write_compose_fixture(fx.path);
    auto job = [&](double depth, const std::string& name) {
        ComposeJob j;
        j.background = fx / "street.png";
        j.reference = fx / "dog.png";
        j.background_depth = fx / "street_depth.pfm";
        j.annotations = fx / "street_annotations.json";
        j.params.location = Location25D::make(BBox::make(0.35, 0.45, 0.65, 0.85), depth);
        j.params.alpha = 0.0;
        j.out_dir = out / name;
        return j;
    };
    const ClientSet mocks = mock_clients();

    auto t0 = Clock::now();
    const ComposeResult low = compose(job(0.5, "low"), mocks);
    const double t_low = seconds_since(t0);
    const VisibleCheck v_low = visible_set(low.bundle);
    o.expect(read_png(out / "low" / "composite_crop.png") == mock_composite(low.bundle), "composite_crop.png differs from the compositor output");
    o.expect(v_low.mismatched == 0, std::to_string(v_low.mismatched) + " pixels disagree with the depth test at 0.5");
    o.expect(v_low.occluded > 0, "the pole hides nothing at depth 0.5");

    t0 = Clock::now();
    const ComposeResult high = compose(job(0.95, "high"), mocks);
    const double t_high = seconds_since(t0);
    const VisibleCheck v_high = visible_set(high.bundle);
    o.expect(v_high.mismatched == 0, std::to_string(v_high.mismatched) + " pixels disagree with the depth test at 0.95");
    std::size_t revealed = 0, still_hidden = 0;
    for (std::size_t k = 0; k < v_low.hidden.size(); ++k) {
        revealed += v_low.hidden[k] && !v_high.hidden[k];
        still_hidden += v_low.hidden[k] && v_high.hidden[k];
    }
    // Pixels still failing at 0.95 must sit in the band where resampling the
    // crop blends object depth with the off-mask zeros.
    const Mask& pm = high.bundle.placed_mask;
    const int W = int(pm.width()), H = int(pm.height());
    auto edge_distance = [&](int x, int y) {
        for (int r = 1;; ++r) {
            for (int dy = -r; dy <= r; ++dy)
                for (int dx = -r; dx <= r; ++dx) {
                    const int u = x + dx, v = y + dy;
                    if (u < 0 || v < 0 || u >= W || v >= H || !pm.on(u, v)) return r;
                }
        }
    };
    int band = 0;
    for (int y = 0; y < H; ++y)
        for (int x = 0; x < W; ++x)
            if (v_high.hidden[std::size_t(y) * W + x]) band = std::max(band, edge_distance(x, y));
    const int blend = int(std::ceil(high.bundle.crop.scale)) + 1;
    o.expect(revealed > 0, "raising the object revealed nothing");
    o.expect(band <= blend, "hidden pixel " + std::to_string(band) + " px inside the mask edge");
    o.notes << "revealed " << revealed << ", still hidden " << still_hidden << " (max " << band << " px from the mask edge); ";
    o.expect(t_low < 5.0 && t_high < 5.0, "job runtime " + fmt(t_low) + " / " + fmt(t_high) + " s");
    o.notes << "depth 0.5: " << v_low.visible << " visible, " << v_low.occluded << " hidden by the pole; depth 0.95: "
            << v_high.visible << " visible, " << v_high.occluded << " hidden; jobs " << fmt(t_low) << " / " << fmt(t_high) << " s";
}

void check_round_trips_and_parity(Outcome& o) {
    std::mt19937_64 rng(99);
    std::uniform_real_distribution<float> U(-1000.0f, 1000.0f);
    for (int i = 0; i < 100; ++i) {
        const std::uint32_t w = 1 + rng() % 50, h = 1 + rng() % 50, c = 1;
        FloatMap m(w, h, c);
        for (auto& v : m.samples()) v = U(rng);
        const FloatMap back = decode_pfm(encode_pfm(m));
        o.expect(back.width() == w && back.height() == h && back.channels() == c &&
                     std::memcmp(back.samples().data(), m.samples().data(), m.sample_count() * sizeof(float)) == 0,
                 "PFM round trip not bit-exact");
    }
    oracle::TempDir bundles;
    for (int i = 0; i < 100; ++i) {
        const ConditioningBundle b = scenes::random_bundle(rng, 32 + 16 * (i % 3));
        const fs::path dir = bundles / std::to_string(i);
        write_bundle(b, dir);
        o.expect(read_bundle(dir) == b, "bundle directory round trip differs");
        const ConditioningBundle again = read_bundle(dir);
        oracle::TempDir re;
        write_bundle(again, re.path);
        o.expect(read_tree(re.path) == read_tree(dir), "rewritten bundle bytes differ");
    }

    // CLI against the in-process service, byte for byte.
    oracle::TempDir fx, work;
    write_compose_fixture(fx.path);
    Config config = default_config();
    config.port = 0;
    config.studio_dir = "";
    Service service(config);
    const int port = service.bind();
    service.start();
    httplib::Client http("127.0.0.1", port);
    http.set_read_timeout(60);

    auto b64 = [&](const fs::path& p) { return base64_encode(read_file(p)); };
    auto api = [&](const std::string& route, const json& body) -> FileSet {
        auto res = http.Post("/api/" + route, body.dump(), "application/json");
        if (!res || res->status != 200) {
            o.expect(false, "/api/" + route + " failed" + (res ? ": " + res->body : std::string()));
            return {};
        }
        return files_from_json(json::parse(res->body).at("files"));
    };
    std::size_t compared = 0;
    auto parity = [&](const std::string& name, const std::string& args, const json& body, bool with_manifest = false) {
        const fs::path dir = work / name;
        const auto r = cli(args + " --out " + oracle::quote(dir));
        if (r.status != 0) {
            o.expect(false, name + " CLI failed: " + r.output);
            return;
        }
        FileSet from_cli = read_tree(dir);
        if (with_manifest) from_cli["manifest.json"] = read_file(dir / "manifest.json");
        const FileSet from_api = api(name, body);
        o.expect(!from_cli.empty() && from_cli == from_api, name + " output differs between CLI and service");
        ++compared;
    };

    // A depth patch for the dog, a mask, and a mask for the ladder.
    const Image dog = read_png(fx / "dog.png");
    write_pfm(mock_depth(dog), work / "dog_depth.pfm");
    write_mask_png(mock_segment(dog, std::nullopt), work / "dog_mask.png");

    parity("fuse",
           "fuse-depth --bg-depth " + oracle::quote(fx / "street_depth.pfm") + " --obj-depth " + oracle::quote(work / "dog_depth.pfm") +
               " --obj-mask " + oracle::quote(work / "dog_mask.png") + " --bbox 0.35,0.45,0.65,0.85 --depth 0.5 --mode place",
           json{{"bg_depth", b64(fx / "street_depth.pfm")},
                {"obj_depth", b64(work / "dog_depth.pfm")},
                {"obj_mask", b64(work / "dog_mask.png")},
                {"location", {{"bbox", {0.35, 0.45, 0.65, 0.85}}, {"depth", 0.5}}},
                {"mode", "place"}});
    parity("detail-map", "detail-map --obj " + oracle::quote(fx / "dog.png") + " --level 3",
           json{{"image", b64(fx / "dog.png")}, {"mask_level", 3}});
    parity("collage", "collage --scene " + oracle::quote(fx / "street.png") + " --obj " + oracle::quote(fx / "dog.png") + " --bbox 0.35,0.45,0.65,0.85",
           json{{"scene", b64(fx / "street.png")}, {"bbox", {0.35, 0.45, 0.65, 0.85}}, {"object", {{"image", b64(fx / "dog.png")}}}});
    parity("augment-mask", "augment-mask --mask " + oracle::quote(work / "dog_mask.png"), json{{"mask", b64(work / "dog_mask.png")}});
    parity("locate",
           "locate --background " + oracle::quote(fx / "street.png") + " --depth " + oracle::quote(fx / "street_depth.pfm") +
               " --annotations " + oracle::quote(fx / "street_annotations.json") + " --instruction 'Place the dog to the left of the car.'",
           json{{"background", b64(fx / "street.png")},
                {"depth", b64(fx / "street_depth.pfm")},
                {"annotations", [&] { const Bytes raw = read_file(fx / "street_annotations.json"); return json::parse(raw.begin(), raw.end()); }()},
                {"instruction", "Place the dog to the left of the car."}});
    parity("compose",
           "compose --background " + oracle::quote(fx / "street.png") + " --reference " + oracle::quote(fx / "dog.png") +
               " --background-depth " + oracle::quote(fx / "street_depth.pfm") + " --annotations " +
               oracle::quote(fx / "street_annotations.json") + " --bbox 0.35,0.45,0.65,0.85 --depth 0.5 --resolution 128",
           json{{"background", b64(fx / "street.png")},
                {"reference", b64(fx / "dog.png")},
                {"background_depth", b64(fx / "street_depth.pfm")},
                {"annotations", b64(fx / "street_annotations.json")},
                {"params", {{"location", {{"bbox", {0.35, 0.45, 0.65, 0.85}}, {"depth", 0.5}}}, {"target_resolution", 128}}}},
           true);
    service.stop();
    o.notes << "100 PFM and 100 bundle round trips; " << compared << " CLI/service operations compared";
}

void check_cli_determinism(Outcome& o) {
    oracle::TempDir fx, runs;
    write_coco_fixture(fx / "coco", 6, 1);
    write_compose_fixture(fx / "compose");
    const fs::path c = fx / "compose";
    write_mask_png(mock_segment(read_png(c / "dog.png"), std::nullopt), fx / "dog_mask.png");
    write_pfm(mock_depth(read_png(c / "dog.png")), fx / "dog_depth.pfm");

    // Build the dataset eval-mllm reads once, outside the comparison.
    const auto base = cli("--seed 7 build-dataset --coco " + oracle::quote(fx / "coco" / "annotations.json") + " --depth-dir " +
                          oracle::quote(fx / "coco" / "depth") + " --n 12 --out " + oracle::quote(fx / "ds"));
    o.expect(base.status == 0, "build-dataset failed: " + base.output);

    const std::map<std::string, std::string> commands{
        {"build-dataset", "build-dataset --coco " + oracle::quote(fx / "coco" / "annotations.json") + " --depth-dir " +
                              oracle::quote(fx / "coco" / "depth") + " --n 12"},
        {"fuse-depth", "fuse-depth --bg-depth " + oracle::quote(c / "street_depth.pfm") + " --obj-depth " + oracle::quote(fx / "dog_depth.pfm") +
                           " --obj-mask " + oracle::quote(fx / "dog_mask.png") + " --bbox 0.35,0.45,0.65,0.85 --depth 0.5"},
        {"detail-map", "detail-map --obj " + oracle::quote(c / "dog.png")},
        {"collage", "collage --scene " + oracle::quote(c / "street.png") + " --obj " + oracle::quote(c / "dog.png") + " --bbox 0.35,0.45,0.65,0.85"},
        {"augment-mask", "augment-mask --mask " + oracle::quote(fx / "dog_mask.png")},
        {"locate", "locate --background " + oracle::quote(c / "street.png") + " --annotations " + oracle::quote(c / "street_annotations.json") +
                       " --instruction 'Put the dog in front of the tree.'"},
        {"compose", "compose --background " + oracle::quote(c / "street.png") + " --reference " + oracle::quote(c / "dog.png") +
                        " --annotations " + oracle::quote(c / "street_annotations.json") +
                        " --instruction 'Place the dog to the right of the tree.' --drop --resolution 128"},
        {"eval-mllm", "eval-mllm --dataset " + oracle::quote(fx / "ds" / "records.jsonl")},
        {"sample-video-pair", "sample-video-pair --frames " + oracle::quote(c / "clip" / "frame0.png") + "," + oracle::quote(c / "clip" / "frame1.png") +
                                  " --masks " + oracle::quote(c / "clip" / "mask0.png") + "," + oracle::quote(c / "clip" / "mask1.png")},
    };
    std::size_t same = 0;
    for (const auto& [name, args] : commands) {
        const fs::path a = runs / (name + "-a"), b = runs / (name + "-b");
        const auto ra = cli("--seed 7 " + args + " --out " + oracle::quote(a));
        const auto rb = cli("--seed 7 " + args + " --out " + oracle::quote(b));
        if (ra.status != 0 || rb.status != 0) {
            o.expect(false, name + " failed: " + ra.output + rb.output);
            continue;
        }
        const bool identical = read_file(a / "manifest.json") == read_file(b / "manifest.json") && hash_tree(a) == hash_tree(b) &&
                               verify_manifest(a / "manifest.json").empty();
        o.expect(identical, name + " output trees differ between runs");
        same += identical;
    }
    o.notes << same << "/" << commands.size() << " commands byte-identical across two runs";
}

}  // namespace

int main(int argc, char** argv) {
    for (int i = 1; i + 1 < argc; ++i) {
        if (std::string(argv[i]) == "--forge") g_forge = argv[i + 1];
    }
    if (g_forge.empty()) {
        std::cerr << "usage: forge_acceptance --forge <path to forge>\n";
        return 2;
    }

    const std::vector<std::pair<std::string, std::function<void(Outcome&)>>> checks{
        {"iou-matches-raster-oracle", check_iou_oracle},
        {"depth-fusion-properties", check_depth_fusion},
        {"detail-map-properties", check_detail_map},
        {"mask-ladder-nesting", check_mask_ladder},
        {"guidance-combination-algebra", check_guidance},
        {"condition-drop-rates", check_drop_rates},
        {"closed-loop-relations", check_closed_loop},
        {"occlusion-aware-compose", check_occlusion_compose},
        {"round-trips-and-cli-service-parity", check_round_trips_and_parity},
        {"cli-determinism", check_cli_determinism},
    };
    int failed = 0;
    for (const auto& [name, check] : checks) {
        Outcome o;
        try {
            check(o);
        } catch (const std::exception& e) {
            o.ok = false;
            o.notes << "exception: " << e.what();
        }
        std::cout << (o.ok ? "PASS " : "FAIL ") << name << " :: " << o.notes.str() << std::endl;
        failed += !o.ok;
    }
    std::cout << (checks.size() - failed) << "/" << checks.size() << " criteria passed" << std::endl;
    return failed == 0 ? 0 : 1;
}
