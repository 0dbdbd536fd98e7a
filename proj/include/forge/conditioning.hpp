#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include <json.hpp>

#include "forge/depth_fusion.hpp"
#include "forge/detail_mask.hpp"
#include "forge/geometry.hpp"
#include "forge/raster.hpp"

namespace forge {

struct DroppedConditions {
    bool id = false;
    bool detail = false;
    bool depth = false;
    friend bool operator==(const DroppedConditions&, const DroppedConditions&) = default;
};

/// Everything the compositor consumes, already cropped to the working square.
struct ConditioningBundle {
    std::uint64_t id = 0;  // stream key for condition dropping
    Image masked_scene;
    Image collage;
    DepthMap fused_depth;
    Image reference_crop;  // square, own resolution
    // Not model inputs: the rescaled object depth and its footprint, kept so
    // the mock compositor can resolve occlusion pixel-exactly.
    DepthMap object_depth;
    Mask placed_mask;
    Mask scene_mask;
    double lambda = 1.0;
    double guidance_scale = 1.0;
    FusionMode mode = FusionMode::place;
    DroppedConditions dropped;
    Location25D location;  // in the source frame
    CropSpec crop;

    friend bool operator==(const ConditioningBundle&, const ConditioningBundle&) = default;
};

/// Throws InvalidBundle when shapes or dropped-flag payloads are inconsistent.
void validate(const ConditioningBundle& bundle);

/// Scene with every scene-mask pixel set to zero; other pixels untouched.
Image mask_scene(const Image& scene, const Mask& scene_mask);

/// Object pixels on a white field, cropped to the square around the mask
/// bounds (shifted into the frame). Output is 3-channel.
Image isolate_object(const Image& image, const Mask& mask);

struct BundleInputs {
    const Image& scene;
    const FusionResult& fusion;
    const Image& collage;  // full-frame collage from stitch_collage
    const Image& reference_crop;
    Location25D location;
    FusionMode mode = FusionMode::place;
    double lambda = 1.0;
    double guidance_scale = 1.0;
    double zoom_ratio = kDefaultZoomRatio;
    std::uint32_t target_resolution = kDefaultTargetResolution;
};

/// Masks the scene, then crops every frame-aligned raster through zoom_in().
ConditioningBundle assemble_bundle(const BundleInputs& in);

/// Pointwise detail + lambda * depth, unclamped.
FloatMap combine_control_maps(const HFMap& detail, const DepthMap& depth, double lambda);

struct DropProbabilities {
    double id = 0.5;
    double control = 0.3;  // applied independently to detail and to depth
};

/// Blanks conditions at random; a pure function of (bundle, probabilities, seed).
ConditioningBundle drop_conditions(const ConditioningBundle& bundle, const DropProbabilities& p, std::uint64_t seed);
/// The three decisions drop_conditions makes, without touching payloads.
DroppedConditions draw_drops(std::uint64_t bundle_id, const DropProbabilities& p, std::uint64_t seed);

/// Dense row-major array of doubles.
struct NdArray {
    std::vector<std::size_t> shape;
    std::vector<double> data;
};

struct GuidanceArrays {
    NdArray eps_uncond;
    NdArray eps_cond;
    double scale = 1.0;
};

/// eps_uncond + s * (eps_cond - eps_uncond), elementwise.
NdArray cfg_combine(const GuidanceArrays& g);

// Bundle directory: masked_scene.png, collage.png, fused_depth.pfm,
// reference.png, meta.json, plus object_depth.pfm, placed_mask.png and
// scene_mask.png for the mock compositor.
void write_bundle(const ConditioningBundle& bundle, const std::filesystem::path& dir);
ConditioningBundle read_bundle(const std::filesystem::path& dir);
nlohmann::json bundle_meta(const ConditioningBundle& bundle);
/// Scalar fields and mask kinds from a meta.json object; rasters left empty.
ConditioningBundle bundle_from_meta(const nlohmann::json& meta);

inline constexpr const char* kBundleFiles[] = {"masked_scene.png", "collage.png",  "fused_depth.pfm",
                                               "reference.png",    "meta.json",    "object_depth.pfm",
                                               "placed_mask.png",  "scene_mask.png"};

}  // namespace forge
