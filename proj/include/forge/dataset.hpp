#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "forge/clients.hpp"
#include "forge/relations.hpp"

namespace forge {

// ---- COCO-style input ------------------------------------------------------------
//
// annotations.json:
//   images:      [{id, file_name, width, height}]
//   annotations: [{id, image_id, category_id, bbox: [x, y, w, h] in pixels, mask_file}]
//   categories:  [{id, name}]
// file_name and mask_file are relative to the JSON's directory; depth for an
// image lives at <depth_dir>/<stem of file_name>.pfm.

struct CocoSource {
    std::filesystem::path root;       // directory holding annotations.json
    std::filesystem::path depth_dir;
    std::vector<SceneAnnotation> scenes;  // image_ref, seg_ref and depth_ref relative to root / depth_dir
};

CocoSource load_coco(const std::filesystem::path& annotations, const std::filesystem::path& depth_dir);

/// A scene with its rasters in memory.
struct SceneData {
    SceneAnnotation annotation;
    Image image;
    DepthMap depth;
    std::map<int, Mask> segs;  // by instance id
};

SceneData load_scene(const CocoSource& source, std::size_t index);

// ---- records ---------------------------------------------------------------------

struct DatasetRecord {
    std::string counterfactual_image;  // relative to the dataset directory
    std::string instruction;
    Location25D answer;
    std::vector<Relation> relations;
    std::string source_image;
    int target_instance = 0;
    std::string target_name;
    std::vector<Instance> anchors;  // id, name and bbox of every anchor named in the instruction
    std::string depth_ref;          // source depth copied into the dataset, relative
    int k = 2;

    friend bool operator==(const DatasetRecord&, const DatasetRecord&) = default;
};

nlohmann::json record_to_json(const DatasetRecord& record);
/// Parses and validates one record; shape or invariant problems raise SchemaViolation.
DatasetRecord record_from_json(const nlohmann::json& j);
std::vector<DatasetRecord> read_records(const std::filesystem::path& jsonl);

struct RecordOptions {
    RelationThresholds thresholds;
    TemplateSet templates = TemplateSet::varied;
    double inpaint_dilate_fraction = kDefaultDilateFraction;
};

struct BuiltRecord {
    DatasetRecord record;  // image paths left empty
    Image counterfactual;
};

/// Picks k-1 anchors (seeded) for `target_id`, derives relations, renders the
/// instruction and removes the target with the inpainter. Anchors must carry
/// names unique in the scene and distinct from the target's name so the
/// instruction stays unambiguous.
BuiltRecord build_record(const SceneData& scene, int target_id, int k, std::uint64_t seed, InpaintClient& inpaint,
                         const RecordOptions& options = {});

struct DatasetOptions {
    std::size_t n = 100;
    std::uint64_t seed = 0;
    unsigned jobs = 1;
    int k_min = 2;
    int k_max = 4;
    RecordOptions record;
};

struct DatasetSummary {
    std::size_t records = 0;
    std::vector<std::string> files;  // relative paths written, sorted
};

/// Writes records.jsonl plus content-addressed images/ and depth/ under
/// `out_dir`. Record i uses scene (i mod scenes) and stream (seed, i), so the
/// output does not depend on `jobs`.
DatasetSummary build_dataset(const CocoSource& source, const DatasetOptions& options, InpaintClient& inpaint,
                             const std::filesystem::path& out_dir);

// ---- video pairs -------------------------------------------------------------------

struct VideoFrame {
    Image image;
    Mask mask;  // the tracked instance
};

struct VideoPair {
    Image reference_crop;  // frame A object on white, square
    Image scene_image;     // frame B with the augmented mask zeroed
    Mask scene_mask;
    Image ground_truth;    // frame B unchanged
    std::size_t frame_a = 0;
    std::size_t frame_b = 0;
    int level = 2;
};

VideoPair sample_video_pair(const std::vector<VideoFrame>& frames, std::uint64_t seed,
                            double dilate_fraction = kDefaultDilateFraction);

// ---- fixtures ----------------------------------------------------------------------

/// Synthetic COCO-mini: `n_images` street-like scenes with 4-6 named
/// instances each, masks, and per-image depth. Deterministic in `seed`.
void write_coco_fixture(const std::filesystem::path& dir, std::size_t n_images = 20, std::uint64_t seed = 1);

/// Compose fixture: street.png, street_depth.pfm (a near pole crossing the
/// middle), street_annotations.json, dog.png (RGBA) and a two-frame clip.
void write_compose_fixture(const std::filesystem::path& dir);

}  // namespace forge
