#pragma once

#include <memory>
#include <optional>
#include <string>
#include <string_view>

#include "forge/conditioning.hpp"
#include "forge/raster.hpp"
#include "forge/relations.hpp"

namespace forge {

enum class ClientKind { depth, segment, inpaint, locate, composite };

std::string_view to_string(ClientKind kind) noexcept;
ClientKind parse_client_kind(std::string_view text);
inline constexpr ClientKind kAllClientKinds[] = {ClientKind::depth, ClientKind::segment, ClientKind::inpaint,
                                                 ClientKind::locate, ClientKind::composite};

struct LocateResponse {
    Location25D location;
    std::string raw_text;  // model transcript
};

// One interface per neural backend. Implementations must be reentrant.

class DepthClient {
public:
    virtual ~DepthClient() = default;
    /// Same-size map, min-max normalized per image, larger = nearer.
    virtual DepthMap predict(const Image& image) = 0;
};

class SegmentClient {
public:
    virtual ~SegmentClient() = default;
    virtual Mask segment(const Image& image, const std::optional<BBox>& hint) = 0;
};

class InpaintClient {
public:
    virtual ~InpaintClient() = default;
    /// Masked pixels replaced; every other pixel returned unchanged.
    virtual Image remove(const Image& image, const Mask& mask) = 0;
};

class LocateClient {
public:
    virtual ~LocateClient() = default;
    virtual LocateResponse locate(const Image& background, const DepthMap& depth, const std::string& instruction,
                                  const SceneAnnotation* annotations) = 0;
};

class CompositeClient {
public:
    virtual ~CompositeClient() = default;
    virtual Image compose(const ConditioningBundle& bundle) = 0;
};

struct ClientSet {
    std::shared_ptr<DepthClient> depth;
    std::shared_ptr<SegmentClient> segment;
    std::shared_ptr<InpaintClient> inpaint;
    std::shared_ptr<LocateClient> locate;
    std::shared_ptr<CompositeClient> composite;
};

/// Per-image min-max normalization; a constant map is only clamped.
DepthMap normalize_depth(const FloatMap& raw);

// ---- deterministic mocks -------------------------------------------------------
//
// Pure functions of their inputs; the mock client classes just forward here so
// the HTTP mock backend and in-process clients share one implementation.

/// d(x, y) = y / (H - 1): top row 0 (far), bottom row 1 (near); H == 1 gives 1.
DepthMap mock_depth(const Image& image);

/// RGBA: alpha > 0. Otherwise Otsu on luma inside the hint box (whole frame
/// without a hint); the class that does not dominate the box border is foreground.
Mask mock_segment(const Image& image, const std::optional<BBox>& hint);

/// Fills the mask with the per-channel median of the unmasked pixels within 2 px
/// of it (Chebyshev); with no such ring, the global median.
Image mock_inpaint(const Image& image, const Mask& mask);

struct LocateGrid {
    int centers = 32;  // per axis
    std::vector<double> sizes = {0.08, 0.12, 0.16, 0.2, 0.25, 0.3, 0.35, 0.4};
    int depths = 16;
};

/// Grid search maximizing the number of instruction relations satisfied
/// against the annotated anchors; ties go to the lowest grid index.
LocateResponse mock_locate(const DepthMap& depth, const std::string& instruction, const SceneAnnotation* annotations,
                           const RelationThresholds& thresholds = {}, const LocateGrid& grid = {});

/// Fills the scene mask from its boundary, then pastes the reference resized to
/// the location box. In place/replace modes an object pixel is drawn only where
/// object_depth >= fused_depth; in id_transfer/inpaint modes over the whole
/// placed mask. A dropped id renders a mid-gray silhouette.
Image mock_composite(const ConditioningBundle& bundle);

ClientSet mock_clients(const RelationThresholds& thresholds = {});

}  // namespace forge
