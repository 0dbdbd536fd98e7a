#include "forge/detail_mask.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <vector>

namespace forge {

MaskLevel::MaskLevel(int level) : level_(level) {
    if (level < 1 || level > 5) fail(ErrorCode::OutOfRange, "mask level must be in 1..5");
}

HFMap hf_extract(const Image& obj_image, const Mask& aug_mask) {
    if (obj_image.width() != aug_mask.width() || obj_image.height() != aug_mask.height()) {
        fail(ErrorCode::DimensionMismatch,
             "image " + obj_image.shape_string() + " and mask differ in size");
    }
    const int w = static_cast<int>(obj_image.width());
    const int h = static_cast<int>(obj_image.height());
    const std::vector<std::int32_t> luma = luma_x1000(obj_image);
    auto at = [&](int x, int y) {
        x = std::clamp(x, 0, w - 1);
        y = std::clamp(y, 0, h - 1);
        return static_cast<std::int64_t>(luma[static_cast<std::size_t>(y) * w + x]);
    };
    constexpr double kMaxResponse = 8.0 * 255.0 * 1000.0;

    FloatMap out(obj_image.width(), obj_image.height(), 1, 0.0f);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const float m = aug_mask.value(x, y);
            if (m == 0.0f) continue;
            const std::int64_t gh = (at(x + 1, y - 1) + 2 * at(x + 1, y) + at(x + 1, y + 1)) -
                                    (at(x - 1, y - 1) + 2 * at(x - 1, y) + at(x - 1, y + 1));
            const std::int64_t gv = (at(x - 1, y + 1) + 2 * at(x, y + 1) + at(x + 1, y + 1)) -
                                    (at(x - 1, y - 1) + 2 * at(x, y - 1) + at(x + 1, y - 1));
            const double response = static_cast<double>(std::llabs(gh) + std::llabs(gv)) / kMaxResponse;
            out.at(x, y) = static_cast<float>(response) * m;
        }
    }
    return HFMap{std::move(out)};
}

int dilation_radius(std::uint32_t width, std::uint32_t height, double dilate_fraction) {
    if (!(dilate_fraction >= 0.0) || !std::isfinite(dilate_fraction)) {
        fail(ErrorCode::InvalidArgument, "dilation fraction must be >= 0");
    }
    return static_cast<int>(std::floor(dilate_fraction * std::max(width, height) + 0.5));
}

Mask dilate(const Mask& mask, int radius) {
    if (radius < 0) fail(ErrorCode::InvalidArgument, "dilation radius must be >= 0");
    const int w = static_cast<int>(mask.width());
    const int h = static_cast<int>(mask.height());
    Mask out(mask.width(), mask.height(), MaskKind::augmented);

    // Per-row prefix counts turn each disk chord into an O(1) interval query.
    std::vector<int> prefix(static_cast<std::size_t>(w + 1) * h, 0);
    for (int y = 0; y < h; ++y) {
        int* row = &prefix[static_cast<std::size_t>(y) * (w + 1)];
        for (int x = 0; x < w; ++x) row[x + 1] = row[x] + (mask.on(x, y) ? 1 : 0);
    }
    std::vector<int> half_width(2 * radius + 1);
    for (int dy = -radius; dy <= radius; ++dy) {
        int hw = 0;
        while ((hw + 1) * (hw + 1) + dy * dy <= radius * radius) ++hw;
        half_width[dy + radius] = hw;
    }
    for (int y = 0; y < h; ++y) {
        for (int dy = -radius; dy <= radius; ++dy) {
            const int sy = y + dy;
            if (sy < 0 || sy >= h) continue;
            const int* row = &prefix[static_cast<std::size_t>(sy) * (w + 1)];
            if (row[w] == 0) continue;
            const int hw = half_width[dy + radius];
            for (int x = 0; x < w; ++x) {
                if (out.on(x, y)) continue;
                const int lo = std::max(0, x - hw);
                const int hi = std::min(w, x + hw + 1);
                if (row[hi] - row[lo] > 0) out.set(x, y, true);
            }
        }
    }
    return out;
}

namespace {

struct Point {
    std::int64_t x;
    std::int64_t y;
    friend bool operator<(const Point& a, const Point& b) { return a.x != b.x ? a.x < b.x : a.y < b.y; }
    friend bool operator==(const Point&, const Point&) = default;
};

std::int64_t cross(const Point& o, const Point& a, const Point& b) {
    return (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x);
}

std::vector<Point> monotone_chain(std::vector<Point> pts) {
    std::sort(pts.begin(), pts.end());
    pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
    if (pts.size() < 3) return pts;
    std::vector<Point> hull(2 * pts.size());
    std::size_t k = 0;
    for (const Point& p : pts) {
        while (k >= 2 && cross(hull[k - 2], hull[k - 1], p) <= 0) --k;
        hull[k++] = p;
    }
    for (std::size_t i = pts.size() - 1, t = k + 1; i-- > 0;) {
        while (k >= t && cross(hull[k - 2], hull[k - 1], pts[i]) <= 0) --k;
        hull[k++] = pts[i];
    }
    hull.resize(k - 1);
    return hull;
}

std::int64_t floor_div(std::int64_t num, std::int64_t den) {
    if (den < 0) num = -num, den = -den;
    std::int64_t q = num / den;
    if ((num % den != 0) && (num < 0)) --q;
    return q;
}

std::int64_t ceil_div(std::int64_t num, std::int64_t den) { return -floor_div(-num, den); }

}  // namespace

Mask convex_hull_fill(const Mask& mask) {
    const int w = static_cast<int>(mask.width());
    const int h = static_cast<int>(mask.height());
    std::vector<Point> pts;
    for (int y = 0; y < h; ++y) {
        int lo = -1, hi = -1;
        for (int x = 0; x < w; ++x) {
            if (!mask.on(x, y)) continue;
            if (lo < 0) lo = x;
            hi = x;
        }
        if (lo >= 0) {
            pts.push_back({lo, y});
            pts.push_back({hi, y});
        }
    }
    Mask out(mask.width(), mask.height(), MaskKind::augmented);
    if (pts.empty()) return out;
    const std::vector<Point> hull = monotone_chain(std::move(pts));
    const std::size_t n = hull.size();

    std::int64_t ymin = hull[0].y, ymax = hull[0].y;
    for (const Point& p : hull) ymin = std::min(ymin, p.y), ymax = std::max(ymax, p.y);

    // Each row of a convex region is one interval; its ends are the extreme
    // edge crossings, computed exactly in rationals.
    for (std::int64_t y = ymin; y <= ymax; ++y) {
        std::int64_t lo = std::numeric_limits<std::int64_t>::max();
        std::int64_t hi = std::numeric_limits<std::int64_t>::min();
        for (std::size_t i = 0; i < n; ++i) {
            const Point& a = hull[i];
            const Point& b = hull[(i + 1) % n];
            if (a.y == b.y) {
                if (a.y == y) {
                    lo = std::min({lo, a.x, b.x});
                    hi = std::max({hi, a.x, b.x});
                }
                continue;
            }
            if (y < std::min(a.y, b.y) || y > std::max(a.y, b.y)) continue;
            const std::int64_t den = b.y - a.y;
            const std::int64_t num = a.x * den + (y - a.y) * (b.x - a.x);
            lo = std::min(lo, ceil_div(num, den));
            hi = std::max(hi, floor_div(num, den));
        }
        for (std::int64_t x = std::max<std::int64_t>(lo, 0); x <= std::min<std::int64_t>(hi, w - 1); ++x) {
            out.set(static_cast<std::uint32_t>(x), static_cast<std::uint32_t>(y), true);
        }
    }
    return out;
}

std::array<Mask, 5> mask_ladder(const Mask& seg, double dilate_fraction) {
    if (seg.count() == 0) fail(ErrorCode::EmptyMask, "segmentation mask is empty");
    const int r = dilation_radius(seg.width(), seg.height(), dilate_fraction);
    std::array<Mask, 5> levels;
    levels[0] = Mask(seg.width(), seg.height(), MaskKind::segmentation);
    for (std::uint32_t y = 0; y < seg.height(); ++y) {
        for (std::uint32_t x = 0; x < seg.width(); ++x) levels[0].set(x, y, seg.on(x, y));
    }
    levels[1] = dilate(levels[0], r);
    levels[2] = convex_hull_fill(levels[1]);
    levels[3] = dilate(levels[2], r);
    levels[4] = Mask::from_rect(seg.width(), seg.height(), *levels[3].bounds(), MaskKind::augmented);
    return levels;
}

Mask augment_mask(const Mask& seg, MaskLevel level, double dilate_fraction) {
    if (level.value() == 5 || level.value() == 4) return mask_ladder(seg, dilate_fraction)[level.value() - 1];
    if (seg.count() == 0) fail(ErrorCode::EmptyMask, "segmentation mask is empty");
    const int r = dilation_radius(seg.width(), seg.height(), dilate_fraction);
    Mask current(seg.width(), seg.height(), MaskKind::segmentation);
    for (std::uint32_t y = 0; y < seg.height(); ++y) {
        for (std::uint32_t x = 0; x < seg.width(); ++x) current.set(x, y, seg.on(x, y));
    }
    if (level.value() >= 2) current = dilate(current, r);
    if (level.value() >= 3) current = convex_hull_fill(current);
    return current;
}

Image stitch_collage(const Image& scene, const HFMap& hf, const BBox& box) {
    const PixelRect rect = box.to_pixels(scene.width(), scene.height());
    if (rect.empty()) fail(ErrorCode::BBoxOutOfFrame, "collage box covers no scene pixel");
    if (hf.raster.empty() || hf.raster.channels() != 1) fail(ErrorCode::InvalidArgument, "detail map must be single-channel");
    const FloatMap patch = resize_bilinear(hf.raster, rect.width(), rect.height());
    const std::uint32_t color_channels = scene.channels() == 4 ? 3 : scene.channels();
    Image out = scene;
    for (int y = 0; y < rect.height(); ++y) {
        for (int x = 0; x < rect.width(); ++x) {
            const double v = std::clamp(static_cast<double>(patch.at(x, y)), 0.0, 1.0);
            const auto g = static_cast<std::uint8_t>(std::floor(v * 255.0 + 0.5));
            for (std::uint32_t c = 0; c < color_channels; ++c) out.at(rect.x0 + x, rect.y0 + y, c) = g;
        }
    }
    return out;
}

Image render_gray(const FloatMap& map) {
    Image out(map.width(), map.height(), 1);
    for (std::size_t i = 0; i < map.sample_count(); ++i) {
        const double v = std::clamp(static_cast<double>(map.samples()[i]), 0.0, 1.0);
        out.samples()[i] = static_cast<std::uint8_t>(std::floor(v * 255.0 + 0.5));
    }
    return out;
}

}  // namespace forge
