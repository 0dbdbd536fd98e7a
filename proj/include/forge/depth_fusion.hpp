#pragma once

#include <string_view>

#include "forge/raster.hpp"

namespace forge {

enum class FusionMode { place, replace, id_transfer, inpaint };
enum class OcclusionRule { nearest_wins, overwrite };

std::string_view to_string(FusionMode mode) noexcept;
FusionMode parse_fusion_mode(std::string_view text);
std::string_view to_string(OcclusionRule rule) noexcept;
OcclusionRule parse_occlusion_rule(std::string_view text);

struct FusionRequest {
    DepthMap bg_depth;
    DepthMap obj_depth;  // reference object's own frame
    Mask obj_mask;       // same frame as obj_depth; a bg-sized mask is used as-is for id_transfer/inpaint
    Location25D location;
    FusionMode mode = FusionMode::place;
    double alpha = 1.0;  // scale of the object's depth relief around its anchor
    OcclusionRule occlusion = OcclusionRule::nearest_wins;
};

struct FusionResult {
    DepthMap fused_depth;
    Mask scene_mask;       // region the compositor must synthesize
    Mask placed_obj_mask;  // object footprint in the background frame
    DepthMap object_depth;  // rescaled object depth in the background frame, 0 off the footprint
};

/// Value at the pixel whose cell holds the box center.
double anchor_depth(const DepthMap& depth, const BBox& box);
double anchor_depth(const DepthMap& depth, const PixelRect& rect);

/// Shifts the object's depth so its anchor lands on `target_depth`:
/// out = clamp(target + alpha * (d - anchor), 0, 1) on the mask, 0 elsewhere.
/// The anchor is the depth at the center of the mask's bounds, or the masked
/// median when that pixel lies outside the mask.
DepthMap rescale_object_depth(const DepthMap& obj_depth, const Mask& obj_mask, double target_depth, double alpha = 1.0);

/// The anchor value rescale_object_depth uses.
double object_anchor(const DepthMap& obj_depth, const Mask& obj_mask);

FusionResult fuse(const FusionRequest& request);

}  // namespace forge
