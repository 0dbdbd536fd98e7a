#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <type_traits>
#include <vector>

#include "forge/error.hpp"

namespace forge {

// Upper bound on samples per raster; anything larger is treated as a corrupt
// header rather than an allocation request.
inline constexpr std::size_t kMaxRasterSamples = std::size_t{1} << 30;
inline constexpr std::uint32_t kMaxRasterSide = 1u << 16;

/// Row-major interleaved pixel container. Images use 8-bit samples, maps use
/// 32-bit floats.
template <typename T>
class Raster {
    static_assert(std::is_same_v<T, std::uint8_t> || std::is_same_v<T, float>);

public:
    Raster() = default;

    Raster(std::uint32_t width, std::uint32_t height, std::uint32_t channels, T fill = T{})
        : width_(width), height_(height), channels_(channels) {
        check_shape();
        data_.assign(sample_count(), fill);
    }

    Raster(std::uint32_t width, std::uint32_t height, std::uint32_t channels, std::vector<T> data)
        : width_(width), height_(height), channels_(channels), data_(std::move(data)) {
        check_shape();
        if (data_.size() != sample_count()) {
            fail(ErrorCode::DimensionMismatch, "sample count " + std::to_string(data_.size()) +
                                                   " does not match " + shape_string());
        }
        if constexpr (std::is_same_v<T, float>) {
            check_finite();
        }
    }

    std::uint32_t width() const noexcept { return width_; }
    std::uint32_t height() const noexcept { return height_; }
    std::uint32_t channels() const noexcept { return channels_; }
    bool empty() const noexcept { return data_.empty(); }
    std::size_t sample_count() const noexcept {
        return std::size_t{width_} * height_ * channels_;
    }

    std::span<const T> samples() const noexcept { return data_; }
    std::span<T> samples() noexcept { return data_; }
    const std::vector<T>& vector() const noexcept { return data_; }

    T& at(std::uint32_t x, std::uint32_t y, std::uint32_t c = 0) noexcept {
        return data_[(std::size_t{y} * width_ + x) * channels_ + c];
    }
    T at(std::uint32_t x, std::uint32_t y, std::uint32_t c = 0) const noexcept {
        return data_[(std::size_t{y} * width_ + x) * channels_ + c];
    }

    bool same_size(const Raster& other) const noexcept {
        return width_ == other.width_ && height_ == other.height_;
    }

    std::string shape_string() const {
        return std::to_string(width_) + "x" + std::to_string(height_) + "x" + std::to_string(channels_);
    }

    void check_finite() const {
        for (float v : data_) {
            if (!std::isfinite(v)) fail(ErrorCode::NonFiniteSample, "raster contains NaN or Inf");
        }
    }

    friend bool operator==(const Raster&, const Raster&) = default;

private:
    void check_shape() const {
        if (width_ == 0 || height_ == 0) fail(ErrorCode::InvalidArgument, "raster dimensions must be >= 1");
        if (channels_ != 1 && channels_ != 3 && channels_ != 4) {
            fail(ErrorCode::InvalidArgument, "raster channels must be 1, 3 or 4");
        }
        if (width_ > kMaxRasterSide || height_ > kMaxRasterSide || sample_count() > kMaxRasterSamples) {
            fail(ErrorCode::DimensionOverflow, "raster too large: " + shape_string());
        }
    }

    std::uint32_t width_ = 0;
    std::uint32_t height_ = 0;
    std::uint32_t channels_ = 0;
    std::vector<T> data_;
};

using Image = Raster<std::uint8_t>;
using FloatMap = Raster<float>;

/// Half-open pixel rectangle [x0, x1) x [y0, y1).
struct PixelRect {
    int x0 = 0;
    int y0 = 0;
    int x1 = 0;
    int y1 = 0;

    int width() const noexcept { return x1 - x0; }
    int height() const noexcept { return y1 - y0; }
    bool empty() const noexcept { return x1 <= x0 || y1 <= y0; }
    bool contains(int x, int y) const noexcept { return x >= x0 && x < x1 && y >= y0 && y < y1; }
    // Pixel whose cell holds the geometric center.
    int center_x() const noexcept { return (x0 + x1) / 2; }
    int center_y() const noexcept { return (y0 + y1) / 2; }

    friend bool operator==(const PixelRect&, const PixelRect&) = default;
};

/// Normalized box, origin top-left, x1 < x2 and y1 < y2, all in [0,1].
struct BBox {
    double x1 = 0.0;
    double y1 = 0.0;
    double x2 = 1.0;
    double y2 = 1.0;

    static BBox make(double x1, double y1, double x2, double y2);
    static BBox from_pixels(const PixelRect& rect, std::uint32_t width, std::uint32_t height);

    double width() const noexcept { return x2 - x1; }
    double height() const noexcept { return y2 - y1; }
    double area() const noexcept { return width() * height(); }
    double center_x() const noexcept { return 0.5 * (x1 + x2); }
    double center_y() const noexcept { return 0.5 * (y1 + y2); }

    /// Rounds each edge to the nearest pixel boundary (half up), clipped to the frame.
    PixelRect to_pixels(std::uint32_t width, std::uint32_t height) const noexcept;

    friend bool operator==(const BBox&, const BBox&) = default;
};

struct Location25D {
    BBox bbox;
    double depth = 0.0;

    static Location25D make(const BBox& bbox, double depth);
    friend bool operator==(const Location25D&, const Location25D&) = default;
};

/// Single-channel float map whose samples all lie in [0,1]; larger is nearer.
class DepthMap {
public:
    DepthMap() = default;
    explicit DepthMap(FloatMap raster);
    DepthMap(std::uint32_t width, std::uint32_t height, float fill = 0.0f);

    /// Clamps out-of-range samples instead of rejecting them. `clamped` reports
    /// whether any sample changed.
    static DepthMap clamped(FloatMap raster, bool* clamped = nullptr);

    std::uint32_t width() const noexcept { return raster_.width(); }
    std::uint32_t height() const noexcept { return raster_.height(); }
    bool empty() const noexcept { return raster_.empty(); }
    float at(std::uint32_t x, std::uint32_t y) const noexcept { return raster_.at(x, y); }
    const FloatMap& raster() const noexcept { return raster_; }

    friend bool operator==(const DepthMap&, const DepthMap&) = default;

private:
    FloatMap raster_;
};

enum class MaskKind { segmentation, augmented, box };

class Mask {
public:
    Mask() = default;
    Mask(FloatMap raster, MaskKind kind = MaskKind::segmentation);
    Mask(std::uint32_t width, std::uint32_t height, MaskKind kind = MaskKind::segmentation);

    static Mask from_rect(std::uint32_t width, std::uint32_t height, const PixelRect& rect,
                          MaskKind kind = MaskKind::box);

    std::uint32_t width() const noexcept { return raster_.width(); }
    std::uint32_t height() const noexcept { return raster_.height(); }
    bool empty() const noexcept { return raster_.empty(); }
    MaskKind kind() const noexcept { return kind_; }
    void set_kind(MaskKind kind) noexcept { kind_ = kind; }

    float value(std::uint32_t x, std::uint32_t y) const noexcept { return raster_.at(x, y); }
    bool on(std::uint32_t x, std::uint32_t y) const noexcept { return raster_.at(x, y) >= 0.5f; }
    void set(std::uint32_t x, std::uint32_t y, bool on) noexcept { raster_.at(x, y) = on ? 1.0f : 0.0f; }

    bool is_binary() const noexcept;
    std::size_t count() const noexcept;
    /// Tight half-open bounds of the "on" pixels; nullopt for an empty mask.
    std::optional<PixelRect> bounds() const noexcept;
    const FloatMap& raster() const noexcept { return raster_; }

    friend bool operator==(const Mask&, const Mask&) = default;

private:
    FloatMap raster_;
    MaskKind kind_ = MaskKind::segmentation;
};

std::string_view to_string(MaskKind kind) noexcept;
MaskKind parse_mask_kind(std::string_view text);

// Resampling helpers shared by fusion, collage and crop code. Bilinear uses
// pixel-center alignment with edge clamping; equal sizes return exact copies.
FloatMap resize_bilinear(const FloatMap& src, std::uint32_t width, std::uint32_t height);
Image resize_bilinear(const Image& src, std::uint32_t width, std::uint32_t height);
FloatMap resize_nearest(const FloatMap& src, std::uint32_t width, std::uint32_t height);

FloatMap crop(const FloatMap& src, const PixelRect& rect);
Image crop(const Image& src, const PixelRect& rect);

/// ITU-R BT.601 luma scaled by 1000 (integer exact): 299 R + 587 G + 114 B.
/// Single-channel images are scaled by 1000 directly; alpha is ignored.
std::vector<std::int32_t> luma_x1000(const Image& image);

}  // namespace forge
