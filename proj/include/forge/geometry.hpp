#pragma once

#include <cstdint>
#include <span>

#include <json.hpp>

#include "forge/raster.hpp"

namespace forge {

/// Square crop around a target box plus the resize factor that brings it to
/// the generator's working resolution.
struct CropSpec {
    PixelRect square;
    double scale = 1.0;  // target_resolution / side
    std::uint32_t target_resolution = 512;
    std::uint32_t frame_width = 0;  // source image size the square lives in
    std::uint32_t frame_height = 0;

    int side() const noexcept { return square.width(); }
    friend bool operator==(const CropSpec&, const CropSpec&) = default;
};

inline constexpr double kDefaultZoomRatio = 2.0;
inline constexpr std::uint32_t kDefaultTargetResolution = 512;

/// Expands `box` to a square of side ratio * max(box_w, box_h) about its
/// center. Squares leaving the frame are shifted back in; sides longer than
/// the short image edge are clamped to it.
CropSpec zoom_in(std::uint32_t image_width, std::uint32_t image_height, const BBox& box,
                 double ratio = kDefaultZoomRatio, std::uint32_t target = kDefaultTargetResolution);

/// Crops `spec.square` and resamples it to target x target (bilinear).
Image apply_crop(const Image& image, const CropSpec& spec);
FloatMap apply_crop(const FloatMap& map, const CropSpec& spec);
/// Nearest-neighbour variant so masks stay binary.
Mask apply_crop(const Mask& mask, const CropSpec& spec);

/// Maps a frame-normalized box into the crop's normalized frame, clipped.
BBox box_in_crop(const BBox& box, const CropSpec& spec);

double iou(const BBox& a, const BBox& b) noexcept;
/// Mean squared difference over the four corner coordinates.
double bbox_mse(const BBox& pred, const BBox& gt) noexcept;
double depth_mse(double pred, double gt);

struct LocationPair {
    Location25D pred;
    Location25D gt;
};

struct EvalReport {
    std::size_t n = 0;
    double bbox_mse = 0.0;
    double iou_mean = 0.0;
    double depth_mse = 0.0;
};

/// Order-independent mean over the pairs; throws InvalidArgument when empty.
EvalReport evaluate(std::span<const LocationPair> pairs);

void to_json(nlohmann::json& j, const EvalReport& report);

}  // namespace forge
