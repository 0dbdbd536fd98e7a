#pragma once

#include <array>

#include "forge/raster.hpp"

namespace forge {

/// Colorless high-frequency detail map in [0,1], zero off the augmented mask.
struct HFMap {
    FloatMap raster;
};

/// Coarseness of the generation mask, 1 (exact segmentation) .. 5 (box).
class MaskLevel {
public:
    explicit MaskLevel(int level);
    int value() const noexcept { return level_; }

private:
    int level_;
};

inline constexpr double kDefaultDilateFraction = 0.02;

/// Sobel magnitude |G_h| + |G_v| of the BT.601 luma, replicate-padded,
/// divided by the largest possible response (8 * 255) and multiplied by the mask.
HFMap hf_extract(const Image& obj_image, const Mask& aug_mask);

/// Dilation radius used by the ladder: round(fraction * max(W, H)).
int dilation_radius(std::uint32_t width, std::uint32_t height, double dilate_fraction);

/// Disk dilation (Euclidean, dx^2 + dy^2 <= r^2), clipped to the frame.
Mask dilate(const Mask& mask, int radius);
/// Filled convex hull of the "on" pixel centers.
Mask convex_hull_fill(const Mask& mask);

/// Level ladder: 1 seg, 2 dilate(seg), 3 hull(level 2), 4 dilate(level 3),
/// 5 bounding box of level 4. Each level contains the previous one.
Mask augment_mask(const Mask& seg, MaskLevel level, double dilate_fraction = kDefaultDilateFraction);
/// All five levels in order; cheaper than five separate calls.
std::array<Mask, 5> mask_ladder(const Mask& seg, double dilate_fraction = kDefaultDilateFraction);

/// Scene with the detail map resized into `box` and written as gray on the
/// color channels (alpha untouched). Pixels outside the box are not modified.
Image stitch_collage(const Image& scene, const HFMap& hf, const BBox& box);

/// Renders a detail map as an 8-bit gray image.
Image render_gray(const FloatMap& map);

}  // namespace forge
