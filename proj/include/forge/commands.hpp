#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "forge/codec.hpp"
#include "forge/config.hpp"

namespace forge {

// Byte-level operations behind both the CLI subcommands and the HTTP service.
// Each returns the files it produces by name so both front ends emit
// identical bytes.

using FileSet = std::map<std::string, Bytes>;

struct FuseArgs {
    Bytes bg_depth;   // PFM
    Bytes obj_depth;  // PFM
    Bytes obj_mask;   // PNG
    Location25D location;
    FusionMode mode = FusionMode::place;
    double alpha = 1.0;
    OcclusionRule occlusion = OcclusionRule::nearest_wins;
};
/// fused_depth.pfm, object_depth.pfm, scene_mask.png, placed_mask.png, fuse.json
FileSet run_fuse(const FuseArgs& args);

struct DetailArgs {
    Bytes image;                // PNG
    std::optional<Bytes> mask;  // PNG; segmented with the client when absent
    int mask_level = 3;
    double dilate_fraction = kDefaultDilateFraction;
};
/// detail_map.pfm, detail_map.png, aug_mask.png
FileSet run_detail_map(const DetailArgs& args, const ClientSet& clients);

struct CollageArgs {
    Bytes scene;  // PNG
    std::optional<DetailArgs> object;
    std::optional<Bytes> hf;  // precomputed detail map (PFM), used instead of `object`
    BBox bbox;
};
/// collage.png, plus the detail_map outputs when computed from `object`
FileSet run_collage(const CollageArgs& args, const ClientSet& clients);

struct AugmentArgs {
    Bytes mask;  // PNG
    std::optional<int> level;  // all five when unset
    double dilate_fraction = kDefaultDilateFraction;
};
/// mask_level{N}.png per requested level
FileSet run_augment_mask(const AugmentArgs& args);

struct LocateArgs {
    Bytes background;            // PNG
    std::optional<Bytes> depth;  // PFM; depth client when absent
    std::string instruction;
    std::optional<SceneAnnotation> annotations;
};
/// location.json
FileSet run_locate(const LocateArgs& args, const ClientSet& clients);

struct ComposeFiles {
    Bytes background;
    Bytes reference;
    std::optional<Bytes> background_depth;
    std::optional<Bytes> annotations;
    std::optional<Bytes> region;
};
ComposeInputs decode_compose_inputs(const ComposeFiles& files);

struct VideoPairArgs {
    std::vector<Bytes> frames;  // PNG
    std::vector<Bytes> masks;   // PNG
    std::uint64_t seed = 0;
    double dilate_fraction = kDefaultDilateFraction;
};
/// reference.png, scene.png, scene_mask.png, ground_truth.png, pair.json
FileSet run_video_pair(const VideoPairArgs& args);

/// Reads every regular file under `dir` (relative generic paths), skipping manifest.json.
FileSet read_tree(const std::filesystem::path& dir);

/// Writes `files` under `dir`, then dir/manifest.json with `header` and the output hashes.
nlohmann::json write_outputs(const std::filesystem::path& dir, const FileSet& files, nlohmann::json header);

/// Single-file form: `primary` goes to `out`, every other file next to it as
/// "<stem>.<name>", and the manifest to "<out>.manifest.json".
nlohmann::json write_outputs_as(const std::filesystem::path& out, const std::string& primary, const FileSet& files,
                                nlohmann::json header);

nlohmann::json files_to_json(const FileSet& files);
FileSet files_from_json(const nlohmann::json& j);

}  // namespace forge
