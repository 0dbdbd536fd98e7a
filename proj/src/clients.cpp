#include "forge/clients.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>

#include "forge/depth_fusion.hpp"

namespace forge {

std::string_view to_string(ClientKind kind) noexcept {
    switch (kind) {
        case ClientKind::depth: return "depth";
        case ClientKind::segment: return "segment";
        case ClientKind::inpaint: return "inpaint";
        case ClientKind::locate: return "locate";
        case ClientKind::composite: return "composite";
    }
    return "depth";
}

ClientKind parse_client_kind(std::string_view text) {
    for (ClientKind k : kAllClientKinds) {
        if (to_string(k) == text) return k;
    }
    fail(ErrorCode::InvalidArgument, "unknown client kind '" + std::string(text) + "'");
}

DepthMap normalize_depth(const FloatMap& raw) {
    if (raw.empty() || raw.channels() != 1) fail(ErrorCode::MalformedResponse, "depth must be a single-channel map");
    raw.check_finite();
    const auto [lo, hi] = std::minmax_element(raw.samples().begin(), raw.samples().end());
    const double min = *lo;
    const double range = static_cast<double>(*hi) - min;
    if (range <= 0.0) return DepthMap::clamped(raw);
    FloatMap out(raw.width(), raw.height(), 1);
    for (std::size_t i = 0; i < raw.sample_count(); ++i) {
        out.samples()[i] = static_cast<float>(std::clamp((raw.samples()[i] - min) / range, 0.0, 1.0));
    }
    return DepthMap(std::move(out));
}

DepthMap mock_depth(const Image& image) {
    if (image.empty()) fail(ErrorCode::InvalidArgument, "empty image");
    FloatMap out(image.width(), image.height(), 1, 1.0f);
    if (image.height() > 1) {
        const double denom = image.height() - 1;
        for (std::uint32_t y = 0; y < image.height(); ++y) {
            const auto v = static_cast<float>(y / denom);
            for (std::uint32_t x = 0; x < image.width(); ++x) out.at(x, y) = v;
        }
    }
    return DepthMap(std::move(out));
}

Mask mock_segment(const Image& image, const std::optional<BBox>& hint) {
    if (image.empty()) fail(ErrorCode::InvalidArgument, "empty image");
    Mask mask(image.width(), image.height(), MaskKind::segmentation);
    if (image.channels() == 4) {
        for (std::uint32_t y = 0; y < image.height(); ++y) {
            for (std::uint32_t x = 0; x < image.width(); ++x) mask.set(x, y, image.at(x, y, 3) > 0);
        }
        if (mask.count() == 0) fail(ErrorCode::NoForeground, "image is fully transparent");
        return mask;
    }

    const PixelRect rect = hint ? hint->to_pixels(image.width(), image.height())
                                : PixelRect{0, 0, static_cast<int>(image.width()), static_cast<int>(image.height())};
    if (rect.empty()) fail(ErrorCode::NoForeground, "hint box covers no pixel");
    const std::vector<std::int32_t> luma = luma_x1000(image);
    auto gray = [&](int x, int y) { return (luma[static_cast<std::size_t>(y) * image.width() + x] + 500) / 1000; };

    std::array<double, 256> hist{};
    for (int y = rect.y0; y < rect.y1; ++y) {
        for (int x = rect.x0; x < rect.x1; ++x) hist[gray(x, y)] += 1.0;
    }
    const double total = static_cast<double>(rect.width()) * rect.height();
    double sum_all = 0.0;
    for (int i = 0; i < 256; ++i) sum_all += i * hist[i];
    double best_var = -1.0, w0 = 0.0, sum0 = 0.0;
    int threshold = -1;
    for (int t = 0; t < 255; ++t) {
        w0 += hist[t];
        sum0 += t * hist[t];
        const double w1 = total - w0;
        if (w0 == 0.0 || w1 == 0.0) continue;
        const double m0 = sum0 / w0;
        const double m1 = (sum_all - sum0) / w1;
        const double var = w0 * w1 * (m0 - m1) * (m0 - m1);
        if (var > best_var) {
            best_var = var;
            threshold = t;
        }
    }
    if (threshold < 0) fail(ErrorCode::NoForeground, "uniform region, nothing to segment");

    long border_high = 0, border_low = 0;
    for (int y = rect.y0; y < rect.y1; ++y) {
        for (int x = rect.x0; x < rect.x1; ++x) {
            if (y != rect.y0 && y != rect.y1 - 1 && x != rect.x0 && x != rect.x1 - 1) continue;
            (gray(x, y) > threshold ? border_high : border_low) += 1;
        }
    }
    const bool foreground_high = border_high <= border_low;
    for (int y = rect.y0; y < rect.y1; ++y) {
        for (int x = rect.x0; x < rect.x1; ++x) mask.set(x, y, (gray(x, y) > threshold) == foreground_high);
    }
    if (mask.count() == 0) fail(ErrorCode::NoForeground, "no foreground pixel found");
    return mask;
}

namespace {

std::uint8_t lower_median(std::vector<std::uint8_t>& values) {
    const std::size_t mid = (values.size() - 1) / 2;
    std::nth_element(values.begin(), values.begin() + mid, values.end());
    return values[mid];
}

}  // namespace

Image mock_inpaint(const Image& image, const Mask& mask) {
    if (image.width() != mask.width() || image.height() != mask.height()) {
        fail(ErrorCode::DimensionMismatch, "image and mask differ in size");
    }
    if (mask.count() == 0) fail(ErrorCode::EmptyMask, "inpaint mask is empty");
    const int w = static_cast<int>(image.width());
    const int h = static_cast<int>(image.height());
    constexpr int kRing = 2;

    std::vector<std::vector<std::uint8_t>> ring(image.channels());
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            if (mask.on(x, y)) continue;
            bool near_mask = false;
            for (int dy = -kRing; dy <= kRing && !near_mask; ++dy) {
                for (int dx = -kRing; dx <= kRing; ++dx) {
                    const int sx = x + dx, sy = y + dy;
                    if (sx >= 0 && sy >= 0 && sx < w && sy < h && mask.on(sx, sy)) {
                        near_mask = true;
                        break;
                    }
                }
            }
            if (!near_mask) continue;
            for (std::uint32_t c = 0; c < image.channels(); ++c) ring[c].push_back(image.at(x, y, c));
        }
    }
    if (ring[0].empty()) {
        for (auto& r : ring) r.clear();
        for (int y = 0; y < h; ++y) {
            for (int x = 0; x < w; ++x) {
                for (std::uint32_t c = 0; c < image.channels(); ++c) ring[c].push_back(image.at(x, y, c));
            }
        }
    }
    std::vector<std::uint8_t> fill(image.channels());
    for (std::uint32_t c = 0; c < image.channels(); ++c) fill[c] = lower_median(ring[c]);

    Image out = image;
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            if (!mask.on(x, y)) continue;
            for (std::uint32_t c = 0; c < image.channels(); ++c) out.at(x, y, c) = fill[c];
        }
    }
    return out;
}

LocateResponse mock_locate(const DepthMap& depth, const std::string& instruction, const SceneAnnotation* annotations,
                           const RelationThresholds& thresholds, const LocateGrid& grid) {
    if (instruction.empty()) fail(ErrorCode::UnparsableInstruction, "empty instruction");
    const ParsedInstruction parsed = parse_instruction(instruction);
    if (annotations == nullptr) fail(ErrorCode::UnparsableInstruction, "mock locator needs scene annotations");

    std::vector<std::pair<Predicate, Location25D>> goals;
    for (const ParsedClause& clause : parsed.clauses) {
        const Instance* anchor = annotations->find_by_name(clause.anchor_name);
        if (anchor == nullptr) fail(ErrorCode::UnparsableInstruction, "unknown object '" + clause.anchor_name + "'");
        goals.emplace_back(clause.predicate, Location25D{anchor->bbox, anchor_depth(depth, anchor->bbox)});
    }

    std::optional<Location25D> best;
    std::size_t best_score = 0;
    for (double size : grid.sizes) {
        const double half = 0.5 * size;
        for (int iy = 0; iy < grid.centers; ++iy) {
            const double cy = (iy + 0.5) / grid.centers;
            if (cy - half < 0.0 || cy + half > 1.0) continue;
            for (int ix = 0; ix < grid.centers; ++ix) {
                const double cx = (ix + 0.5) / grid.centers;
                if (cx - half < 0.0 || cx + half > 1.0) continue;
                const BBox box{cx - half, cy - half, cx + half, cy + half};
                for (int id = 0; id < grid.depths; ++id) {
                    const Location25D cand{box, (id + 0.5) / grid.depths};
                    std::size_t score = 0;
                    for (const auto& [pred, anchor] : goals) score += classify(cand, anchor, thresholds) == pred;
                    if (!best || score > best_score) {
                        best = cand;
                        best_score = score;
                        if (score == goals.size()) goto done;
                    }
                }
            }
        }
    }
done:
    if (!best) fail(ErrorCode::UnparsableInstruction, "locate grid has no candidate inside the frame");
    char text[160];
    std::snprintf(text, sizeof text, "[%.4f, %.4f, %.4f, %.4f], %.4f", best->bbox.x1, best->bbox.y1, best->bbox.x2,
                  best->bbox.y2, best->depth);
    return LocateResponse{*best, text};
}

Image mock_composite(const ConditioningBundle& b) {
    validate(b);
    const std::uint32_t n = b.crop.target_resolution;
    Image out = b.scene_mask.count() > 0 ? mock_inpaint(b.masked_scene, b.scene_mask) : b.masked_scene;

    const PixelRect rect = box_in_crop(b.location.bbox, b.crop).to_pixels(n, n);
    if (rect.empty()) fail(ErrorCode::InvalidBundle, "location box vanishes inside the crop");
    const Image ref = resize_bilinear(b.reference_crop, rect.width(), rect.height());
    const bool depth_test = b.mode == FusionMode::place || b.mode == FusionMode::replace;
    const std::uint32_t color_channels = out.channels() == 4 ? 3 : out.channels();

    for (std::uint32_t y = 0; y < n; ++y) {
        for (std::uint32_t x = 0; x < n; ++x) {
            if (!b.placed_mask.on(x, y)) continue;
            if (depth_test && b.object_depth.at(x, y) < b.fused_depth.at(x, y)) continue;
            const auto rx = static_cast<std::uint32_t>(std::clamp(static_cast<int>(x) - rect.x0, 0, rect.width() - 1));
            const auto ry = static_cast<std::uint32_t>(std::clamp(static_cast<int>(y) - rect.y0, 0, rect.height() - 1));
            for (std::uint32_t c = 0; c < color_channels; ++c) {
                std::uint8_t v = 128;
                if (!b.dropped.id) v = ref.at(rx, ry, ref.channels() == 1 ? 0 : std::min(c, 2u));
                out.at(x, y, c) = v;
            }
        }
    }
    return out;
}

namespace {

class MockDepth final : public DepthClient {
public:
    DepthMap predict(const Image& image) override { return mock_depth(image); }
};

class MockSegment final : public SegmentClient {
public:
    Mask segment(const Image& image, const std::optional<BBox>& hint) override { return mock_segment(image, hint); }
};

class MockInpaint final : public InpaintClient {
public:
    Image remove(const Image& image, const Mask& mask) override { return mock_inpaint(image, mask); }
};

class MockLocate final : public LocateClient {
public:
    explicit MockLocate(RelationThresholds t) : thresholds_(t) {}
    LocateResponse locate(const Image&, const DepthMap& depth, const std::string& instruction,
                          const SceneAnnotation* annotations) override {
        return mock_locate(depth, instruction, annotations, thresholds_);
    }

private:
    RelationThresholds thresholds_;
};

class MockComposite final : public CompositeClient {
public:
    Image compose(const ConditioningBundle& bundle) override { return mock_composite(bundle); }
};

}  // namespace

ClientSet mock_clients(const RelationThresholds& thresholds) {
    return ClientSet{std::make_shared<MockDepth>(), std::make_shared<MockSegment>(), std::make_shared<MockInpaint>(),
                     std::make_shared<MockLocate>(thresholds), std::make_shared<MockComposite>()};
}

}  // namespace forge
