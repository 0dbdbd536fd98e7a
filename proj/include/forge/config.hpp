#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "forge/pipeline.hpp"
#include "forge/transport.hpp"

namespace forge {

/// Runtime configuration. TOML layout:
///
///   seed = 7
///   jobs = 4
///   [relations]  depth_threshold, xy_threshold
///   [compose]    lambda, guidance_scale, mask_level, alpha, zoom_ratio, target_resolution, dilate_fraction
///   [backends.<kind>]  transport = "mock" | "http" | "subprocess", url | command, timeout
///   [serve]      host, port, studio_dir
///
/// FORGE_BACKEND_<KIND>_URL in the environment switches that backend to HTTP.
struct Config {
    std::uint64_t seed = 0;
    unsigned jobs = 1;
    RelationThresholds thresholds;
    ComposeParams compose;
    std::vector<ClientEndpoint> endpoints;  // one per kind, in kAllClientKinds order
    std::string host = "127.0.0.1";
    int port = 8765;
    std::filesystem::path studio_dir = "studio";
};

using Environment = std::map<std::string, std::string>;

/// The process environment, restricted to FORGE_* variables.
Environment process_environment();

Config default_config();
Config parse_config(const std::string& toml_text, const Environment& env = {});
Config load_config(const std::optional<std::filesystem::path>& file, const Environment& env);

ClientSet make_clients(const Config& config);
nlohmann::json describe_endpoints(const Config& config);

}  // namespace forge
