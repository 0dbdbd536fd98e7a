#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "forge/clients.hpp"
#include "forge/conditioning.hpp"
#include "forge/dataset.hpp"

namespace forge {

struct ComposeParams {
    std::optional<std::string> instruction;
    std::optional<Location25D> location;  // exactly one of instruction / location
    FusionMode mode = FusionMode::place;
    int mask_level = 3;
    double lambda = 1.0;
    double guidance_scale = 9.0;
    double alpha = 1.0;
    OcclusionRule occlusion = OcclusionRule::nearest_wins;
    double zoom_ratio = kDefaultZoomRatio;
    std::uint32_t target_resolution = kDefaultTargetResolution;
    double dilate_fraction = kDefaultDilateFraction;
    std::uint64_t seed = 0;
    bool drop = false;  // apply seeded condition dropping (training-style bundles)
    DropProbabilities drop_probabilities;
};

nlohmann::json to_json(const ComposeParams& p);

/// Decoded inputs. background_depth replaces the depth client for the
/// background; region is the bg-sized mask id_transfer/inpaint modes edit.
struct ComposeInputs {
    Image background;
    Image reference;
    std::optional<DepthMap> background_depth;
    std::optional<SceneAnnotation> annotations;
    std::optional<Mask> region;
    nlohmann::json input_hashes = nlohmann::json::object();  // name -> sha256 of the source bytes
};

struct ComposeJob {
    std::filesystem::path background;
    std::filesystem::path reference;
    std::optional<std::filesystem::path> background_depth;
    std::optional<std::filesystem::path> annotations;
    std::optional<std::filesystem::path> region;
    ComposeParams params;
    std::filesystem::path out_dir;
};

ComposeInputs load_inputs(const ComposeJob& job);

struct ComposeResult {
    Image output;  // background with the scene-mask pixels replaced
    ConditioningBundle bundle;
    Location25D location;
    bool located = false;  // true when the locate client was consulted
    nlohmann::json manifest;
};

/// segment(reference) -> depth(bg), depth(reference) -> locate -> fuse ->
/// augment_mask -> hf_extract -> stitch_collage -> zoom_in -> assemble_bundle
/// -> composite. Every intermediate and manifest.json land in out_dir; on a
/// stage failure the manifest names it and the error is rethrown.
ComposeResult compose(const ComposeInputs& inputs, const ComposeParams& params, const ClientSet& clients,
                      const std::filesystem::path& out_dir, const nlohmann::json& endpoints = nlohmann::json::array());
ComposeResult compose(const ComposeJob& job, const ClientSet& clients,
                      const nlohmann::json& endpoints = nlohmann::json::array());

// ---- evaluation --------------------------------------------------------------------

/// Published scores of a fine-tuned locator, reported next to ours for comparison.
nlohmann::json published_reference();

struct EvalOptions {
    RelationThresholds thresholds;
    unsigned jobs = 1;
};

/// Calls the locator on every record and aggregates bbox MSE, IoU, depth MSE
/// and the rate of record relations the predictions satisfy.
nlohmann::json run_eval(const std::filesystem::path& records_jsonl, const ClientSet& clients,
                        const EvalOptions& options = {});

// ---- manifests ---------------------------------------------------------------------

/// Relative path -> sha256 for every regular file under `dir`, sorted,
/// skipping manifest.json.
nlohmann::json hash_tree(const std::filesystem::path& dir);

/// Adds "outputs" (hash_tree) to `header` and writes dir/manifest.json.
nlohmann::json write_manifest(const std::filesystem::path& dir, nlohmann::json header);

/// Files whose current hash differs from the manifest (missing files included).
std::vector<std::string> verify_manifest(const std::filesystem::path& manifest_path);

}  // namespace forge
