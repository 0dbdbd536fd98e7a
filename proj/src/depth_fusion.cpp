#include "forge/depth_fusion.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace forge {

std::string_view to_string(FusionMode mode) noexcept {
    switch (mode) {
        case FusionMode::place: return "place";
        case FusionMode::replace: return "replace";
        case FusionMode::id_transfer: return "id_transfer";
        case FusionMode::inpaint: return "inpaint";
    }
    return "place";
}

FusionMode parse_fusion_mode(std::string_view text) {
    if (text == "place") return FusionMode::place;
    if (text == "replace") return FusionMode::replace;
    if (text == "id_transfer" || text == "id-transfer") return FusionMode::id_transfer;
    if (text == "inpaint") return FusionMode::inpaint;
    fail(ErrorCode::InvalidArgument, "unknown fusion mode '" + std::string(text) + "'");
}

std::string_view to_string(OcclusionRule rule) noexcept {
    return rule == OcclusionRule::overwrite ? "overwrite" : "nearest_wins";
}

OcclusionRule parse_occlusion_rule(std::string_view text) {
    if (text == "nearest_wins" || text == "nearest-wins") return OcclusionRule::nearest_wins;
    if (text == "overwrite") return OcclusionRule::overwrite;
    fail(ErrorCode::InvalidArgument, "unknown occlusion rule '" + std::string(text) + "'");
}

double anchor_depth(const DepthMap& depth, const PixelRect& rect) {
    if (rect.empty() || rect.x0 < 0 || rect.y0 < 0 || rect.x1 > static_cast<int>(depth.width()) ||
        rect.y1 > static_cast<int>(depth.height())) {
        fail(ErrorCode::BBoxOutOfFrame, "anchor box outside the depth frame");
    }
    return depth.at(rect.center_x(), rect.center_y());
}

double anchor_depth(const DepthMap& depth, const BBox& box) {
    return anchor_depth(depth, box.to_pixels(depth.width(), depth.height()));
}

double object_anchor(const DepthMap& obj_depth, const Mask& obj_mask) {
    if (obj_depth.width() != obj_mask.width() || obj_depth.height() != obj_mask.height()) {
        fail(ErrorCode::DimensionMismatch, "object depth and mask differ in size");
    }
    const auto bounds = obj_mask.bounds();
    if (!bounds) fail(ErrorCode::EmptyMask, "object mask is empty");
    const int cx = bounds->center_x();
    const int cy = bounds->center_y();
    if (obj_mask.on(cx, cy)) return obj_depth.at(cx, cy);

    // Center falls in a hole (ring- or C-shaped masks): masked median.
    std::vector<float> values;
    values.reserve(obj_mask.count());
    for (std::uint32_t y = 0; y < obj_mask.height(); ++y) {
        for (std::uint32_t x = 0; x < obj_mask.width(); ++x) {
            if (obj_mask.on(x, y)) values.push_back(obj_depth.at(x, y));
        }
    }
    const std::size_t mid = values.size() / 2;
    std::nth_element(values.begin(), values.begin() + mid, values.end());
    double median = values[mid];
    if (values.size() % 2 == 0) {
        const float lower = *std::max_element(values.begin(), values.begin() + mid);
        median = 0.5 * (median + lower);
    }
    return median;
}

DepthMap rescale_object_depth(const DepthMap& obj_depth, const Mask& obj_mask, double target_depth, double alpha) {
    if (!(target_depth >= 0.0 && target_depth <= 1.0)) fail(ErrorCode::OutOfRange, "target depth must lie in [0,1]");
    if (!std::isfinite(alpha)) fail(ErrorCode::InvalidArgument, "alpha must be finite");
    const double anchor = object_anchor(obj_depth, obj_mask);
    FloatMap out(obj_depth.width(), obj_depth.height(), 1, 0.0f);
    for (std::uint32_t y = 0; y < out.height(); ++y) {
        for (std::uint32_t x = 0; x < out.width(); ++x) {
            if (!obj_mask.on(x, y)) continue;
            const double v = target_depth + alpha * (obj_depth.at(x, y) - anchor);
            out.at(x, y) = static_cast<float>(std::clamp(v, 0.0, 1.0));
        }
    }
    return DepthMap(std::move(out));
}

namespace {

PixelRect frame_rect(const FusionRequest& req) {
    const PixelRect rect = req.location.bbox.to_pixels(req.bg_depth.width(), req.bg_depth.height());
    if (rect.empty()) fail(ErrorCode::BBoxOutOfFrame, "location box covers no background pixel");
    return rect;
}

Mask paste_mask(const Mask& patch, const PixelRect& rect, std::uint32_t width, std::uint32_t height, MaskKind kind) {
    Mask out(width, height, kind);
    for (int y = 0; y < rect.height(); ++y) {
        for (int x = 0; x < rect.width(); ++x) {
            if (patch.on(x, y)) out.set(rect.x0 + x, rect.y0 + y, true);
        }
    }
    return out;
}

}  // namespace

FusionResult fuse(const FusionRequest& req) {
    const std::uint32_t w = req.bg_depth.width();
    const std::uint32_t h = req.bg_depth.height();
    if (req.bg_depth.empty() || req.obj_mask.empty()) fail(ErrorCode::InvalidArgument, "fusion inputs must not be empty");
    const PixelRect rect = frame_rect(req);
    const Location25D loc = Location25D::make(req.location.bbox, req.location.depth);

    FusionResult result;
    if (req.mode == FusionMode::id_transfer || req.mode == FusionMode::inpaint) {
        Mask region;
        if (req.obj_mask.width() == w && req.obj_mask.height() == h) {
            region = req.obj_mask;
        } else {
            const Mask patch(resize_nearest(req.obj_mask.raster(), rect.width(), rect.height()));
            region = paste_mask(patch, rect, w, h, MaskKind::segmentation);
        }
        if (region.count() == 0) fail(ErrorCode::EmptyMask, "generation mask is empty");
        result.fused_depth = req.bg_depth;
        result.scene_mask = region;
        result.placed_obj_mask = region;
        result.object_depth = DepthMap(w, h, 0.0f);
        return result;
    }

    if (req.obj_depth.width() != req.obj_mask.width() || req.obj_depth.height() != req.obj_mask.height()) {
        fail(ErrorCode::DimensionMismatch, "object depth and mask differ in size");
    }
    const Mask patch_mask(resize_nearest(req.obj_mask.raster(), rect.width(), rect.height()));
    if (patch_mask.count() == 0) fail(ErrorCode::EmptyMask, "object mask vanishes at the placed size");
    const DepthMap patch_depth =
        DepthMap::clamped(resize_bilinear(req.obj_depth.raster(), rect.width(), rect.height()));
    const DepthMap placed = rescale_object_depth(patch_depth, patch_mask, loc.depth, req.alpha);

    FloatMap fused = req.bg_depth.raster();
    FloatMap object(w, h, 1, 0.0f);
    for (int y = 0; y < rect.height(); ++y) {
        for (int x = 0; x < rect.width(); ++x) {
            const int fx = rect.x0 + x;
            const int fy = rect.y0 + y;
            float& dst = fused.at(fx, fy);
            if (!patch_mask.on(x, y)) {
                if (req.mode == FusionMode::replace) dst = 0.0f;
                continue;
            }
            const float v = placed.at(x, y);
            object.at(fx, fy) = v;
            if (req.mode == FusionMode::place && req.occlusion == OcclusionRule::nearest_wins) {
                dst = std::max(dst, v);
            } else {
                dst = v;
            }
        }
    }
    result.fused_depth = DepthMap(std::move(fused));
    result.scene_mask = Mask::from_rect(w, h, rect, MaskKind::box);
    result.placed_obj_mask = paste_mask(patch_mask, rect, w, h, MaskKind::segmentation);
    result.object_depth = DepthMap(std::move(object));
    return result;
}

}  // namespace forge
