#include "forge/geometry.hpp"

#include <algorithm>
#include <cmath>

namespace forge {

CropSpec zoom_in(std::uint32_t image_width, std::uint32_t image_height, const BBox& box, double ratio,
                 std::uint32_t target) {
    if (!(ratio >= 1.0) || !std::isfinite(ratio)) fail(ErrorCode::InvalidArgument, "zoom ratio must be >= 1");
    if (target == 0) fail(ErrorCode::InvalidArgument, "target resolution must be positive");
    const PixelRect px = box.to_pixels(image_width, image_height);
    if (px.empty()) fail(ErrorCode::DegenerateBox, "box has zero area after pixel rounding");

    const int w = static_cast<int>(image_width);
    const int h = static_cast<int>(image_height);
    int side = static_cast<int>(std::floor(ratio * std::max(px.width(), px.height()) + 0.5));
    side = std::clamp(side, 1, std::min(w, h));

    // Twice the center keeps the arithmetic integral for odd-sized boxes.
    const int cx2 = px.x0 + px.x1;
    const int cy2 = px.y0 + px.y1;
    int x0 = static_cast<int>(std::floor((cx2 - side) / 2.0 + 0.5));
    int y0 = static_cast<int>(std::floor((cy2 - side) / 2.0 + 0.5));
    x0 = std::clamp(x0, 0, w - side);
    y0 = std::clamp(y0, 0, h - side);

    CropSpec spec;
    spec.square = PixelRect{x0, y0, x0 + side, y0 + side};
    spec.scale = static_cast<double>(target) / side;
    spec.target_resolution = target;
    spec.frame_width = image_width;
    spec.frame_height = image_height;
    return spec;
}

Image apply_crop(const Image& image, const CropSpec& spec) {
    return resize_bilinear(crop(image, spec.square), spec.target_resolution, spec.target_resolution);
}

FloatMap apply_crop(const FloatMap& map, const CropSpec& spec) {
    return resize_bilinear(crop(map, spec.square), spec.target_resolution, spec.target_resolution);
}

Mask apply_crop(const Mask& mask, const CropSpec& spec) {
    return Mask(resize_nearest(crop(mask.raster(), spec.square), spec.target_resolution, spec.target_resolution),
                mask.kind());
}

BBox box_in_crop(const BBox& box, const CropSpec& spec) {
    const double side = spec.side();
    auto map_x = [&](double v) { return std::clamp((v * spec.frame_width - spec.square.x0) / side, 0.0, 1.0); };
    auto map_y = [&](double v) { return std::clamp((v * spec.frame_height - spec.square.y0) / side, 0.0, 1.0); };
    return BBox::make(map_x(box.x1), map_y(box.y1), map_x(box.x2), map_y(box.y2));
}

double iou(const BBox& a, const BBox& b) noexcept {
    const double ix = std::max(0.0, std::min(a.x2, b.x2) - std::max(a.x1, b.x1));
    const double iy = std::max(0.0, std::min(a.y2, b.y2) - std::max(a.y1, b.y1));
    const double inter = ix * iy;
    const double uni = a.area() + b.area() - inter;
    if (uni <= 0.0) return 0.0;
    return std::clamp(inter / uni, 0.0, 1.0);
}

double bbox_mse(const BBox& pred, const BBox& gt) noexcept {
    const double d[4] = {pred.x1 - gt.x1, pred.y1 - gt.y1, pred.x2 - gt.x2, pred.y2 - gt.y2};
    return (d[0] * d[0] + d[1] * d[1] + d[2] * d[2] + d[3] * d[3]) / 4.0;
}

double depth_mse(double pred, double gt) {
    if (!(pred >= 0.0 && pred <= 1.0) || !(gt >= 0.0 && gt <= 1.0)) {
        fail(ErrorCode::OutOfRange, "depth values must lie in [0,1]");
    }
    return (pred - gt) * (pred - gt);
}

EvalReport evaluate(std::span<const LocationPair> pairs) {
    if (pairs.empty()) fail(ErrorCode::InvalidArgument, "cannot evaluate an empty set");
    EvalReport report;
    report.n = pairs.size();
    for (const auto& p : pairs) {
        report.bbox_mse += bbox_mse(p.pred.bbox, p.gt.bbox);
        report.iou_mean += iou(p.pred.bbox, p.gt.bbox);
        report.depth_mse += depth_mse(p.pred.depth, p.gt.depth);
    }
    const auto n = static_cast<double>(pairs.size());
    report.bbox_mse /= n;
    report.iou_mean /= n;
    report.depth_mse /= n;
    return report;
}

void to_json(nlohmann::json& j, const EvalReport& report) {
    j = nlohmann::json{{"n", report.n},
                       {"bbox_mse", report.bbox_mse},
                       {"iou_mean", report.iou_mean},
                       {"depth_mse", report.depth_mse}};
}

}  // namespace forge
