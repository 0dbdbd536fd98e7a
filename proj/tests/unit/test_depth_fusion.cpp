#include <gtest/gtest.h>

#include "forge/depth_fusion.hpp"

using namespace forge;

namespace {

Mask full(std::uint32_t w, std::uint32_t h) { return Mask::from_rect(w, h, PixelRect{0, 0, int(w), int(h)}, MaskKind::segmentation); }

}  // namespace

TEST(Rescale, ConstantShift) {
    const DepthMap d = rescale_object_depth(DepthMap(5, 5, 0.3f), full(5, 5), 0.8);
    for (float v : d.raster().samples()) EXPECT_FLOAT_EQ(v, 0.8f);
}

TEST(Rescale, RangeShiftAndClamp) {
    // Column values 0.2, 0.3, 0.4; the center column is the anchor.
    FloatMap m(3, 1, 1, std::vector<float>{0.2f, 0.3f, 0.4f});
    const DepthMap d = rescale_object_depth(DepthMap(m), full(3, 1), 0.9);
    EXPECT_NEAR(d.at(0, 0), 0.8, 1e-6);
    EXPECT_NEAR(d.at(1, 0), 0.9, 1e-6);
    EXPECT_NEAR(d.at(2, 0), 1.0, 1e-6);
    const DepthMap c = rescale_object_depth(DepthMap(m), full(3, 1), 0.95);
    EXPECT_EQ(c.at(2, 0), 1.0f);
}

TEST(Rescale, AlphaScalesRelief) {
    FloatMap m(3, 1, 1, std::vector<float>{0.2f, 0.3f, 0.4f});
    const DepthMap flat = rescale_object_depth(DepthMap(m), full(3, 1), 0.5, 0.0);
    for (float v : flat.raster().samples()) EXPECT_FLOAT_EQ(v, 0.5f);
    const DepthMap half = rescale_object_depth(DepthMap(m), full(3, 1), 0.5, 0.5);
    EXPECT_NEAR(half.at(0, 0), 0.45, 1e-6);
}

TEST(Rescale, HoleAtCenterUsesMedian) {
    FloatMap m(3, 3, 1, 0.0f);
    Mask ring(3, 3);
    float v = 0.1f;
    for (std::uint32_t y = 0; y < 3; ++y) {
        for (std::uint32_t x = 0; x < 3; ++x) {
            if (x == 1 && y == 1) continue;
            ring.set(x, y, true);
            m.at(x, y) = v;
            v += 0.1f;
        }
    }
    EXPECT_NEAR(object_anchor(DepthMap(m), ring), (0.4 + 0.5) / 2, 1e-6);
}

TEST(Rescale, Errors) {
    EXPECT_THROW(rescale_object_depth(DepthMap(2, 2, 0.1f), Mask(2, 2), 0.5), Error);
    EXPECT_THROW(rescale_object_depth(DepthMap(2, 2, 0.1f), full(3, 3), 0.5), Error);
    EXPECT_THROW(rescale_object_depth(DepthMap(2, 2, 0.1f), full(2, 2), 1.5), Error);
}

TEST(Fuse, PlaceNearerObject) {
    FusionRequest r;
    r.bg_depth = DepthMap(10, 10, 0.5f);
    r.obj_depth = DepthMap(4, 4, 0.1f);
    r.obj_mask = full(4, 4);
    r.location = Location25D::make(BBox::make(0.3, 0.3, 0.7, 0.7), 0.8);
    const FusionResult f = fuse(r);
    for (std::uint32_t y = 0; y < 10; ++y) {
        for (std::uint32_t x = 0; x < 10; ++x) {
            const bool in = x >= 3 && x < 7 && y >= 3 && y < 7;
            EXPECT_FLOAT_EQ(f.fused_depth.at(x, y), in ? 0.8f : 0.5f);
            EXPECT_EQ(f.placed_obj_mask.on(x, y), in);
        }
    }
    EXPECT_EQ(f.scene_mask.count(), 16u);
}

TEST(Fuse, PlaceBehindLeavesBackground) {
    FusionRequest r;
    r.bg_depth = DepthMap(10, 10, 0.5f);
    r.obj_depth = DepthMap(4, 4, 0.9f);
    r.obj_mask = full(4, 4);
    r.location = Location25D::make(BBox::make(0.3, 0.3, 0.7, 0.7), 0.3);
    EXPECT_EQ(fuse(r).fused_depth, r.bg_depth);
    r.occlusion = OcclusionRule::overwrite;
    EXPECT_FLOAT_EQ(fuse(r).fused_depth.at(5, 5), 0.3f);
}

TEST(Fuse, ReplaceZeroesNonObjectBoxPixels) {
    FusionRequest r;
    r.bg_depth = DepthMap(20, 20, 0.5f);
    r.obj_depth = DepthMap(10, 10, 0.4f);
    Mask m(10, 10);
    for (int y = 3; y < 7; ++y)
        for (int x = 3; x < 7; ++x) m.set(x, y, true);
    r.obj_mask = m;
    r.location = Location25D::make(BBox::make(0.25, 0.25, 0.75, 0.75), 0.6);
    r.mode = FusionMode::replace;
    const FusionResult f = fuse(r);
    int zeros = 0, object = 0;
    for (std::uint32_t y = 0; y < 20; ++y) {
        for (std::uint32_t x = 0; x < 20; ++x) {
            const bool in_box = x >= 5 && x < 15 && y >= 5 && y < 15;
            const float v = f.fused_depth.at(x, y);
            if (!in_box) {
                EXPECT_EQ(v, 0.5f);
            } else if (f.placed_obj_mask.on(x, y)) {
                EXPECT_FLOAT_EQ(v, 0.6f);
                ++object;
            } else {
                EXPECT_EQ(v, 0.0f);
                ++zeros;
            }
        }
    }
    EXPECT_EQ(object, 16);
    EXPECT_EQ(zeros, 84);
}

TEST(Fuse, RegionModesKeepBackgroundDepth) {
    FusionRequest r;
    r.bg_depth = DepthMap(8, 8, 0.4f);
    Mask region(8, 8);
    region.set(2, 2, true);
    r.obj_mask = region;
    r.location = Location25D::make(BBox::make(0.25, 0.25, 0.5, 0.5), 0.7);
    for (FusionMode mode : {FusionMode::id_transfer, FusionMode::inpaint}) {
        r.mode = mode;
        const FusionResult f = fuse(r);
        EXPECT_EQ(f.fused_depth, r.bg_depth);
        EXPECT_EQ(f.scene_mask, region);
    }
    r.obj_mask = Mask(8, 8);
    EXPECT_THROW(fuse(r), Error);
}

TEST(Fuse, BoxMustCoverPixels) {
    FusionRequest r;
    r.bg_depth = DepthMap(4, 4, 0.4f);
    r.obj_depth = DepthMap(2, 2, 0.4f);
    r.obj_mask = full(2, 2);
    r.location = Location25D::make(BBox::make(0.5, 0.5, 0.55, 0.55), 0.5);
    EXPECT_THROW(fuse(r), Error);
}

TEST(AnchorDepth, Examples) {
    EXPECT_FLOAT_EQ(anchor_depth(DepthMap(7, 5, 0.62f), BBox::make(0.1, 0.2, 0.9, 0.4)), 0.62f);
    const std::uint32_t H = 100;
    FloatMap g(4, H, 1);
    for (std::uint32_t y = 0; y < H; ++y)
        for (std::uint32_t x = 0; x < 4; ++x) g.at(x, y) = 1.0f - float(y) / H;
    EXPECT_NEAR(anchor_depth(DepthMap(g), BBox::make(0, 0.25, 1, 0.75)), 0.5, 0.5 / H + 1e-6);
    FloatMap one(4, 4, 1, 0.0f);
    one.at(2, 1) = 0.33f;
    EXPECT_FLOAT_EQ(anchor_depth(DepthMap(one), PixelRect{2, 1, 3, 2}), 0.33f);
    EXPECT_THROW(anchor_depth(DepthMap(one), PixelRect{2, 1, 9, 2}), Error);
}

TEST(FusionNames, RoundTrip) {
    for (FusionMode m : {FusionMode::place, FusionMode::replace, FusionMode::id_transfer, FusionMode::inpaint}) {
        EXPECT_EQ(parse_fusion_mode(to_string(m)), m);
    }
    EXPECT_THROW(parse_fusion_mode("teleport"), Error);
    EXPECT_EQ(parse_occlusion_rule("overwrite"), OcclusionRule::overwrite);
}
