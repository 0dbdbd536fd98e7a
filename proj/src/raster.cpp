#include "forge/raster.hpp"

#include <algorithm>

namespace forge {

std::string_view to_string(ErrorCode code) noexcept {
    switch (code) {
        case ErrorCode::InvalidArgument: return "InvalidArgument";
        case ErrorCode::MalformedHeader: return "MalformedHeader";
        case ErrorCode::NonFiniteSample: return "NonFiniteSample";
        case ErrorCode::DimensionOverflow: return "DimensionOverflow";
        case ErrorCode::DimensionMismatch: return "DimensionMismatch";
        case ErrorCode::IoFailure: return "IoFailure";
        case ErrorCode::UnsupportedBitDepth: return "UnsupportedBitDepth";
        case ErrorCode::OutOfRange: return "OutOfRange";
        case ErrorCode::DegenerateBox: return "DegenerateBox";
        case ErrorCode::BBoxOutOfFrame: return "BBoxOutOfFrame";
        case ErrorCode::EmptyMask: return "EmptyMask";
        case ErrorCode::TooFewInstances: return "TooFewInstances";
        case ErrorCode::InpaintFailure: return "InpaintFailure";
        case ErrorCode::InstanceMissing: return "InstanceMissing";
        case ErrorCode::ShapeMismatch: return "ShapeMismatch";
        case ErrorCode::BackendUnavailable: return "BackendUnavailable";
        case ErrorCode::Timeout: return "Timeout";
        case ErrorCode::NoForeground: return "NoForeground";
        case ErrorCode::UnparsableInstruction: return "UnparsableInstruction";
        case ErrorCode::InvalidBundle: return "InvalidBundle";
        case ErrorCode::MalformedResponse: return "MalformedResponse";
        case ErrorCode::SchemaViolation: return "SchemaViolation";
        case ErrorCode::PortInUse: return "PortInUse";
    }
    return "Unknown";
}

std::optional<ErrorCode> parse_error_code(std::string_view name) noexcept {
    for (int i = 0; i <= static_cast<int>(ErrorCode::PortInUse); ++i) {
        if (to_string(static_cast<ErrorCode>(i)) == name) return static_cast<ErrorCode>(i);
    }
    return std::nullopt;
}

std::string_view to_string(MaskKind kind) noexcept {
    switch (kind) {
        case MaskKind::segmentation: return "segmentation";
        case MaskKind::augmented: return "augmented";
        case MaskKind::box: return "box";
    }
    return "segmentation";
}

MaskKind parse_mask_kind(std::string_view text) {
    if (text == "segmentation") return MaskKind::segmentation;
    if (text == "augmented") return MaskKind::augmented;
    if (text == "box") return MaskKind::box;
    fail(ErrorCode::InvalidArgument, "unknown mask kind '" + std::string(text) + "'");
}

namespace {

bool in_unit(double v) { return std::isfinite(v) && v >= 0.0 && v <= 1.0; }

int round_half_up(double v) { return static_cast<int>(std::floor(v + 0.5)); }

}  // namespace

BBox BBox::make(double x1, double y1, double x2, double y2) {
    if (!in_unit(x1) || !in_unit(y1) || !in_unit(x2) || !in_unit(y2)) {
        fail(ErrorCode::OutOfRange, "bbox coordinates must lie in [0,1]");
    }
    if (!(x1 < x2) || !(y1 < y2)) fail(ErrorCode::DegenerateBox, "bbox requires x1 < x2 and y1 < y2");
    return BBox{x1, y1, x2, y2};
}

BBox BBox::from_pixels(const PixelRect& rect, std::uint32_t width, std::uint32_t height) {
    return make(static_cast<double>(rect.x0) / width, static_cast<double>(rect.y0) / height,
                static_cast<double>(rect.x1) / width, static_cast<double>(rect.y1) / height);
}

PixelRect BBox::to_pixels(std::uint32_t width, std::uint32_t height) const noexcept {
    const int w = static_cast<int>(width);
    const int h = static_cast<int>(height);
    return PixelRect{std::clamp(round_half_up(x1 * w), 0, w), std::clamp(round_half_up(y1 * h), 0, h),
                     std::clamp(round_half_up(x2 * w), 0, w), std::clamp(round_half_up(y2 * h), 0, h)};
}

Location25D Location25D::make(const BBox& bbox, double depth) {
    if (!in_unit(depth)) fail(ErrorCode::OutOfRange, "depth must lie in [0,1]");
    BBox::make(bbox.x1, bbox.y1, bbox.x2, bbox.y2);
    return Location25D{bbox, depth};
}

DepthMap::DepthMap(FloatMap raster) : raster_(std::move(raster)) {
    if (raster_.empty()) fail(ErrorCode::InvalidArgument, "depth map must not be empty");
    if (raster_.channels() != 1) fail(ErrorCode::InvalidArgument, "depth map must be single-channel");
    raster_.check_finite();
    for (float v : raster_.samples()) {
        if (v < 0.0f || v > 1.0f) fail(ErrorCode::OutOfRange, "depth sample outside [0,1]");
    }
}

DepthMap::DepthMap(std::uint32_t width, std::uint32_t height, float fill)
    : DepthMap(FloatMap(width, height, 1, fill)) {}

DepthMap DepthMap::clamped(FloatMap raster, bool* clamped) {
    raster.check_finite();
    bool changed = false;
    for (float& v : raster.samples()) {
        const float c = std::clamp(v, 0.0f, 1.0f);
        changed |= (c != v);
        v = c;
    }
    if (clamped != nullptr) *clamped = changed;
    return DepthMap(std::move(raster));
}

Mask::Mask(FloatMap raster, MaskKind kind) : raster_(std::move(raster)), kind_(kind) {
    if (raster_.empty()) fail(ErrorCode::InvalidArgument, "mask must not be empty");
    if (raster_.channels() != 1) fail(ErrorCode::InvalidArgument, "mask must be single-channel");
    raster_.check_finite();
    for (float v : raster_.samples()) {
        if (v < 0.0f || v > 1.0f) fail(ErrorCode::OutOfRange, "mask sample outside [0,1]");
    }
}

Mask::Mask(std::uint32_t width, std::uint32_t height, MaskKind kind)
    : raster_(width, height, 1, 0.0f), kind_(kind) {}

Mask Mask::from_rect(std::uint32_t width, std::uint32_t height, const PixelRect& rect, MaskKind kind) {
    Mask mask(width, height, kind);
    const int w = static_cast<int>(width);
    const int h = static_cast<int>(height);
    for (int y = std::max(rect.y0, 0); y < std::min(rect.y1, h); ++y) {
        for (int x = std::max(rect.x0, 0); x < std::min(rect.x1, w); ++x) mask.set(x, y, true);
    }
    return mask;
}

bool Mask::is_binary() const noexcept {
    return std::all_of(raster_.samples().begin(), raster_.samples().end(),
                       [](float v) { return v == 0.0f || v == 1.0f; });
}

std::size_t Mask::count() const noexcept {
    return static_cast<std::size_t>(std::count_if(raster_.samples().begin(), raster_.samples().end(),
                                                  [](float v) { return v >= 0.5f; }));
}

std::optional<PixelRect> Mask::bounds() const noexcept {
    int x0 = static_cast<int>(width()), y0 = static_cast<int>(height()), x1 = -1, y1 = -1;
    for (std::uint32_t y = 0; y < height(); ++y) {
        for (std::uint32_t x = 0; x < width(); ++x) {
            if (!on(x, y)) continue;
            x0 = std::min<int>(x0, x);
            y0 = std::min<int>(y0, y);
            x1 = std::max<int>(x1, x);
            y1 = std::max<int>(y1, y);
        }
    }
    if (x1 < 0) return std::nullopt;
    return PixelRect{x0, y0, x1 + 1, y1 + 1};
}

namespace {

struct Tap {
    std::uint32_t i0;
    std::uint32_t i1;
    double w1;
};

std::vector<Tap> bilinear_taps(std::uint32_t src, std::uint32_t dst) {
    std::vector<Tap> taps(dst);
    const double scale = static_cast<double>(src) / dst;
    for (std::uint32_t i = 0; i < dst; ++i) {
        double s = (i + 0.5) * scale - 0.5;
        s = std::clamp(s, 0.0, static_cast<double>(src - 1));
        const auto i0 = static_cast<std::uint32_t>(std::floor(s));
        const std::uint32_t i1 = std::min(i0 + 1, src - 1);
        taps[i] = Tap{i0, i1, s - i0};
    }
    return taps;
}

template <typename T>
Raster<T> resize_bilinear_impl(const Raster<T>& src, std::uint32_t width, std::uint32_t height) {
    if (src.width() == width && src.height() == height) return src;
    Raster<T> out(width, height, src.channels());
    const auto tx = bilinear_taps(src.width(), width);
    const auto ty = bilinear_taps(src.height(), height);
    for (std::uint32_t y = 0; y < height; ++y) {
        const Tap& a = ty[y];
        for (std::uint32_t x = 0; x < width; ++x) {
            const Tap& b = tx[x];
            for (std::uint32_t c = 0; c < src.channels(); ++c) {
                const double top = src.at(b.i0, a.i0, c) * (1.0 - b.w1) + src.at(b.i1, a.i0, c) * b.w1;
                const double bot = src.at(b.i0, a.i1, c) * (1.0 - b.w1) + src.at(b.i1, a.i1, c) * b.w1;
                const double v = top * (1.0 - a.w1) + bot * a.w1;
                if constexpr (std::is_same_v<T, float>) {
                    out.at(x, y, c) = static_cast<float>(v);
                } else {
                    out.at(x, y, c) = static_cast<std::uint8_t>(std::clamp(std::floor(v + 0.5), 0.0, 255.0));
                }
            }
        }
    }
    return out;
}

template <typename T>
Raster<T> crop_impl(const Raster<T>& src, const PixelRect& rect) {
    if (rect.empty() || rect.x0 < 0 || rect.y0 < 0 || rect.x1 > static_cast<int>(src.width()) ||
        rect.y1 > static_cast<int>(src.height())) {
        fail(ErrorCode::BBoxOutOfFrame, "crop rectangle outside the raster");
    }
    Raster<T> out(rect.width(), rect.height(), src.channels());
    for (int y = rect.y0; y < rect.y1; ++y) {
        for (int x = rect.x0; x < rect.x1; ++x) {
            for (std::uint32_t c = 0; c < src.channels(); ++c) out.at(x - rect.x0, y - rect.y0, c) = src.at(x, y, c);
        }
    }
    return out;
}

}  // namespace

FloatMap resize_bilinear(const FloatMap& src, std::uint32_t width, std::uint32_t height) {
    return resize_bilinear_impl(src, width, height);
}

Image resize_bilinear(const Image& src, std::uint32_t width, std::uint32_t height) {
    return resize_bilinear_impl(src, width, height);
}

FloatMap resize_nearest(const FloatMap& src, std::uint32_t width, std::uint32_t height) {
    if (src.width() == width && src.height() == height) return src;
    FloatMap out(width, height, src.channels());
    for (std::uint32_t y = 0; y < height; ++y) {
        const auto sy = std::min<std::uint32_t>(
            static_cast<std::uint32_t>((static_cast<std::uint64_t>(y) * 2 + 1) * src.height() / (2ull * height)),
            src.height() - 1);
        for (std::uint32_t x = 0; x < width; ++x) {
            const auto sx = std::min<std::uint32_t>(
                static_cast<std::uint32_t>((static_cast<std::uint64_t>(x) * 2 + 1) * src.width() / (2ull * width)),
                src.width() - 1);
            for (std::uint32_t c = 0; c < src.channels(); ++c) out.at(x, y, c) = src.at(sx, sy, c);
        }
    }
    return out;
}

FloatMap crop(const FloatMap& src, const PixelRect& rect) { return crop_impl(src, rect); }
Image crop(const Image& src, const PixelRect& rect) { return crop_impl(src, rect); }

std::vector<std::int32_t> luma_x1000(const Image& image) {
    std::vector<std::int32_t> out(std::size_t{image.width()} * image.height());
    for (std::uint32_t y = 0; y < image.height(); ++y) {
        for (std::uint32_t x = 0; x < image.width(); ++x) {
            std::int32_t v;
            if (image.channels() == 1) {
                v = 1000 * image.at(x, y);
            } else {
                v = 299 * image.at(x, y, 0) + 587 * image.at(x, y, 1) + 114 * image.at(x, y, 2);
            }
            out[std::size_t{y} * image.width() + x] = v;
        }
    }
    return out;
}

}  // namespace forge
