#include "forge/conditioning.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>

#include "forge/codec.hpp"
#include "forge/rng.hpp"

namespace forge {

namespace fs = std::filesystem;

namespace {

std::uint64_t fnv1a(std::uint64_t h, std::span<const std::uint8_t> bytes) {
    for (std::uint8_t b : bytes) {
        h ^= b;
        h *= 0x100000001b3ull;
    }
    return h;
}

std::uint64_t fnv1a(std::uint64_t h, double v) {
    return fnv1a(h, std::span(reinterpret_cast<const std::uint8_t*>(&v), sizeof v));
}

bool all_zero(std::span<const std::uint8_t> s) {
    return std::all_of(s.begin(), s.end(), [](std::uint8_t v) { return v == 0; });
}

bool all_zero(std::span<const float> s) {
    return std::all_of(s.begin(), s.end(), [](float v) { return v == 0.0f; });
}

}  // namespace

void validate(const ConditioningBundle& b) {
    const std::uint32_t n = b.crop.target_resolution;
    auto check = [&](bool ok, const char* what) {
        if (!ok) fail(ErrorCode::InvalidBundle, what);
    };
    check(!b.masked_scene.empty() && b.masked_scene.width() == n && b.masked_scene.height() == n,
          "masked scene must match the target resolution");
    check(b.collage.width() == n && b.collage.height() == n, "collage must match the target resolution");
    check(b.fused_depth.width() == n && b.fused_depth.height() == n, "fused depth must match the target resolution");
    check(b.object_depth.width() == n && b.object_depth.height() == n, "object depth must match the target resolution");
    check(b.placed_mask.width() == n && b.placed_mask.height() == n, "placed mask must match the target resolution");
    check(b.scene_mask.width() == n && b.scene_mask.height() == n, "scene mask must match the target resolution");
    check(!b.reference_crop.empty() && b.reference_crop.width() == b.reference_crop.height(),
          "reference crop must be square");
    check(b.lambda >= 0.0 && std::isfinite(b.lambda), "lambda must be >= 0");
    check(b.guidance_scale >= 0.0 && std::isfinite(b.guidance_scale), "guidance scale must be >= 0");
    check(!b.dropped.id || all_zero(b.reference_crop.samples()), "dropped id requires a blank reference");
    check(!b.dropped.detail || all_zero(b.collage.samples()), "dropped detail requires a blank collage");
    check(!b.dropped.depth || all_zero(b.fused_depth.raster().samples()), "dropped depth requires a blank depth map");
}

Image mask_scene(const Image& scene, const Mask& scene_mask) {
    if (scene.width() != scene_mask.width() || scene.height() != scene_mask.height()) {
        fail(ErrorCode::DimensionMismatch, "scene and scene mask differ in size");
    }
    Image out = scene;
    for (std::uint32_t y = 0; y < scene.height(); ++y) {
        for (std::uint32_t x = 0; x < scene.width(); ++x) {
            if (!scene_mask.on(x, y)) continue;
            for (std::uint32_t c = 0; c < scene.channels(); ++c) out.at(x, y, c) = 0;
        }
    }
    return out;
}

Image isolate_object(const Image& image, const Mask& mask) {
    if (image.width() != mask.width() || image.height() != mask.height()) {
        fail(ErrorCode::DimensionMismatch, "image and mask differ in size");
    }
    const auto bounds = mask.bounds();
    if (!bounds) fail(ErrorCode::EmptyMask, "object mask is empty");
    const CropSpec spec = zoom_in(image.width(), image.height(),
                                  BBox::from_pixels(*bounds, image.width(), image.height()), 1.0, 1);
    const PixelRect& sq = spec.square;
    Image out(sq.width(), sq.height(), 3, 255);
    for (int y = sq.y0; y < sq.y1; ++y) {
        for (int x = sq.x0; x < sq.x1; ++x) {
            if (!mask.on(x, y)) continue;
            for (std::uint32_t c = 0; c < 3; ++c) {
                out.at(x - sq.x0, y - sq.y0, c) = image.at(x, y, image.channels() == 1 ? 0 : c);
            }
        }
    }
    return out;
}

ConditioningBundle assemble_bundle(const BundleInputs& in) {
    const std::uint32_t w = in.scene.width();
    const std::uint32_t h = in.scene.height();
    if (in.fusion.fused_depth.width() != w || in.fusion.fused_depth.height() != h || in.collage.width() != w ||
        in.collage.height() != h) {
        fail(ErrorCode::DimensionMismatch, "fusion result and collage must match the scene frame");
    }
    if (in.reference_crop.empty() || in.reference_crop.width() != in.reference_crop.height()) {
        fail(ErrorCode::DimensionMismatch, "reference crop must be square");
    }

    ConditioningBundle b;
    b.crop = zoom_in(w, h, in.location.bbox, in.zoom_ratio, in.target_resolution);
    b.masked_scene = apply_crop(mask_scene(in.scene, in.fusion.scene_mask), b.crop);
    b.collage = apply_crop(in.collage, b.crop);
    b.fused_depth = DepthMap::clamped(apply_crop(in.fusion.fused_depth.raster(), b.crop));
    b.object_depth = DepthMap::clamped(apply_crop(in.fusion.object_depth.raster(), b.crop));
    b.placed_mask = apply_crop(in.fusion.placed_obj_mask, b.crop);
    b.scene_mask = apply_crop(in.fusion.scene_mask, b.crop);
    b.reference_crop = in.reference_crop;
    b.lambda = in.lambda;
    b.guidance_scale = in.guidance_scale;
    b.mode = in.mode;
    b.location = in.location;

    std::uint64_t id = 0xcbf29ce484222325ull;
    id = fnv1a(id, b.masked_scene.samples());
    id = fnv1a(id, b.reference_crop.samples());
    for (double v : {in.location.bbox.x1, in.location.bbox.y1, in.location.bbox.x2, in.location.bbox.y2,
                     in.location.depth}) {
        id = fnv1a(id, v);
    }
    b.id = id;
    validate(b);
    return b;
}

FloatMap combine_control_maps(const HFMap& detail, const DepthMap& depth, double lambda) {
    if (detail.raster.width() != depth.width() || detail.raster.height() != depth.height() ||
        detail.raster.channels() != 1) {
        fail(ErrorCode::DimensionMismatch, "detail and depth maps differ in size");
    }
    if (!std::isfinite(lambda)) fail(ErrorCode::InvalidArgument, "lambda must be finite");
    FloatMap out(depth.width(), depth.height(), 1);
    for (std::size_t i = 0; i < out.sample_count(); ++i) {
        out.samples()[i] = static_cast<float>(static_cast<double>(detail.raster.samples()[i]) +
                                              lambda * static_cast<double>(depth.raster().samples()[i]));
    }
    return out;
}

DroppedConditions draw_drops(std::uint64_t bundle_id, const DropProbabilities& p, std::uint64_t seed) {
    for (double v : {p.id, p.control}) {
        if (!(v >= 0.0 && v <= 1.0)) fail(ErrorCode::OutOfRange, "drop probabilities must lie in [0,1]");
    }
    Rng rng = Rng::stream(seed, bundle_id);
    DroppedConditions d;
    d.id = rng.bernoulli(p.id);
    d.detail = rng.bernoulli(p.control);
    d.depth = rng.bernoulli(p.control);
    return d;
}

ConditioningBundle drop_conditions(const ConditioningBundle& bundle, const DropProbabilities& p, std::uint64_t seed) {
    const DroppedConditions d = draw_drops(bundle.id, p, seed);
    ConditioningBundle out = bundle;
    if (d.id) {
        out.dropped.id = true;
        std::fill(out.reference_crop.samples().begin(), out.reference_crop.samples().end(), std::uint8_t{0});
    }
    if (d.detail) {
        out.dropped.detail = true;
        std::fill(out.collage.samples().begin(), out.collage.samples().end(), std::uint8_t{0});
    }
    if (d.depth) {
        out.dropped.depth = true;
        out.fused_depth = DepthMap(out.fused_depth.width(), out.fused_depth.height(), 0.0f);
    }
    return out;
}

NdArray cfg_combine(const GuidanceArrays& g) {
    const auto expected = [](const NdArray& a) {
        return std::accumulate(a.shape.begin(), a.shape.end(), std::size_t{1}, std::multiplies<>());
    };
    if (g.eps_uncond.shape != g.eps_cond.shape) fail(ErrorCode::ShapeMismatch, "guidance arrays differ in shape");
    if (g.eps_uncond.data.size() != expected(g.eps_uncond) || g.eps_cond.data.size() != expected(g.eps_cond)) {
        fail(ErrorCode::ShapeMismatch, "array data does not match its shape");
    }
    if (!std::isfinite(g.scale)) fail(ErrorCode::InvalidArgument, "guidance scale must be finite");
    NdArray out{g.eps_uncond.shape, std::vector<double>(g.eps_uncond.data.size())};
    for (std::size_t i = 0; i < out.data.size(); ++i) {
        const double uc = g.eps_uncond.data[i];
        const double c = g.eps_cond.data[i];
        if (!std::isfinite(uc) || !std::isfinite(c)) fail(ErrorCode::NonFiniteSample, "guidance arrays must be finite");
        out.data[i] = uc + g.scale * (c - uc);
    }
    return out;
}

nlohmann::json bundle_meta(const ConditioningBundle& b) {
    const PixelRect& sq = b.crop.square;
    return nlohmann::json{
        {"id", b.id},
        {"lambda", b.lambda},
        {"guidance_scale", b.guidance_scale},
        {"mode", to_string(b.mode)},
        {"dropped", {{"id", b.dropped.id}, {"detail", b.dropped.detail}, {"depth", b.dropped.depth}}},
        {"location", b.location},
        {"crop",
         {{"square", {sq.x0, sq.y0, sq.x1, sq.y1}},
          {"scale", b.crop.scale},
          {"target_resolution", b.crop.target_resolution},
          {"frame_size", {b.crop.frame_width, b.crop.frame_height}}}},
        {"placed_mask_kind", to_string(b.placed_mask.kind())},
        {"scene_mask_kind", to_string(b.scene_mask.kind())},
    };
}

void write_bundle(const ConditioningBundle& b, const fs::path& dir) {
    validate(b);
    fs::create_directories(dir);
    write_png(b.masked_scene, dir / "masked_scene.png");
    write_png(b.collage, dir / "collage.png");
    write_pfm(b.fused_depth, dir / "fused_depth.pfm");
    write_png(b.reference_crop, dir / "reference.png");
    write_pfm(b.object_depth, dir / "object_depth.pfm");
    write_mask_png(b.placed_mask, dir / "placed_mask.png");
    write_mask_png(b.scene_mask, dir / "scene_mask.png");
    write_text(dir / "meta.json", bundle_meta(b).dump(2) + "\n");
}

ConditioningBundle bundle_from_meta(const nlohmann::json& meta) {
    ConditioningBundle b;
    try {
        b.id = meta.at("id").get<std::uint64_t>();
        b.lambda = meta.at("lambda").get<double>();
        b.guidance_scale = meta.at("guidance_scale").get<double>();
        b.mode = parse_fusion_mode(meta.at("mode").get<std::string>());
        const auto& d = meta.at("dropped");
        b.dropped = DroppedConditions{d.at("id").get<bool>(), d.at("detail").get<bool>(), d.at("depth").get<bool>()};
        b.location = meta.at("location").get<Location25D>();
        const auto& crop = meta.at("crop");
        const auto sq = crop.at("square").get<std::vector<int>>();
        if (sq.size() != 4) fail(ErrorCode::InvalidBundle, "crop.square must have 4 entries");
        b.crop.square = PixelRect{sq[0], sq[1], sq[2], sq[3]};
        b.crop.scale = crop.at("scale").get<double>();
        b.crop.target_resolution = crop.at("target_resolution").get<std::uint32_t>();
        const auto frame = crop.at("frame_size").get<std::vector<std::uint32_t>>();
        if (frame.size() != 2) fail(ErrorCode::InvalidBundle, "crop.frame_size must have 2 entries");
        b.crop.frame_width = frame[0];
        b.crop.frame_height = frame[1];
        b.placed_mask.set_kind(parse_mask_kind(meta.at("placed_mask_kind").get<std::string>()));
        b.scene_mask.set_kind(parse_mask_kind(meta.at("scene_mask_kind").get<std::string>()));
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorCode::InvalidBundle, std::string("meta.json: ") + e.what());
    } catch (const Error& e) {
        fail(ErrorCode::InvalidBundle, std::string("meta.json: ") + e.what());
    }
    return b;
}

ConditioningBundle read_bundle(const fs::path& dir) {
    nlohmann::json meta;
    try {
        const Bytes raw = read_file(dir / "meta.json");
        meta = nlohmann::json::parse(raw.begin(), raw.end());
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorCode::InvalidBundle, std::string("meta.json: ") + e.what());
    }
    ConditioningBundle b = bundle_from_meta(meta);
    b.masked_scene = read_png(dir / "masked_scene.png");
    b.collage = read_png(dir / "collage.png");
    b.fused_depth = read_pfm(dir / "fused_depth.pfm").map;
    b.reference_crop = read_png(dir / "reference.png");
    b.object_depth = read_pfm(dir / "object_depth.pfm").map;
    b.placed_mask = read_mask_png(dir / "placed_mask.png", b.placed_mask.kind());
    b.scene_mask = read_mask_png(dir / "scene_mask.png", b.scene_mask.kind());
    validate(b);
    return b;
}

}  // namespace forge
