#include "forge/config.hpp"

#include <cctype>

#include <toml.hpp>

#include "forge/codec.hpp"

extern char** environ;

namespace forge {

Environment process_environment() {
    Environment env;
    for (char** e = environ; e != nullptr && *e != nullptr; ++e) {
        const std::string kv(*e);
        const std::size_t eq = kv.find('=');
        if (eq == std::string::npos || kv.rfind("FORGE_", 0) != 0) continue;
        env[kv.substr(0, eq)] = kv.substr(eq + 1);
    }
    return env;
}

Config default_config() {
    Config c;
    for (ClientKind k : kAllClientKinds) c.endpoints.push_back(ClientEndpoint{k, LocalMockTransport{}, 60.0});
    return c;
}

namespace {

template <typename T>
T get(const toml::node_view<const toml::node>& node, T fallback, const char* key) {
    if (!node) return fallback;
    if constexpr (std::is_floating_point_v<T>) {
        if (auto v = node.value<double>()) return static_cast<T>(*v);
    } else if constexpr (std::is_integral_v<T>) {
        if (auto v = node.value<std::int64_t>()) {
            if (*v < 0) fail(ErrorCode::InvalidArgument, std::string("config: ") + key + " must not be negative");
            return static_cast<T>(*v);
        }
    } else {
        if (auto v = node.value<std::string>()) return *v;
    }
    fail(ErrorCode::InvalidArgument, std::string("config: ") + key + " has the wrong type");
}

std::string upper(std::string_view s) {
    std::string out(s);
    for (char& c : out) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    return out;
}

}  // namespace

Config parse_config(const std::string& text, const Environment& env) {
    Config c = default_config();
    toml::table doc;
    try {
        doc = toml::parse(text);
    } catch (const toml::parse_error& e) {
        fail(ErrorCode::InvalidArgument, std::string("config: ") + std::string(e.description()));
    }
    const toml::node_view<const toml::node> root{static_cast<const toml::node&>(doc)};

    c.seed = get<std::uint64_t>(root["seed"], c.seed, "seed");
    c.jobs = std::max(1u, get<unsigned>(root["jobs"], c.jobs, "jobs"));
    c.thresholds.depth = get<double>(root["relations"]["depth_threshold"], c.thresholds.depth, "depth_threshold");
    c.thresholds.xy = get<double>(root["relations"]["xy_threshold"], c.thresholds.xy, "xy_threshold");

    const auto cp = root["compose"];
    c.compose.lambda = get<double>(cp["lambda"], c.compose.lambda, "lambda");
    c.compose.guidance_scale = get<double>(cp["guidance_scale"], c.compose.guidance_scale, "guidance_scale");
    c.compose.mask_level = get<int>(cp["mask_level"], c.compose.mask_level, "mask_level");
    c.compose.alpha = get<double>(cp["alpha"], c.compose.alpha, "alpha");
    c.compose.zoom_ratio = get<double>(cp["zoom_ratio"], c.compose.zoom_ratio, "zoom_ratio");
    c.compose.target_resolution =
        get<std::uint32_t>(cp["target_resolution"], c.compose.target_resolution, "target_resolution");
    c.compose.dilate_fraction = get<double>(cp["dilate_fraction"], c.compose.dilate_fraction, "dilate_fraction");
    MaskLevel check_level(c.compose.mask_level);

    for (ClientEndpoint& e : c.endpoints) {
        const std::string kind(to_string(e.kind));
        const auto b = root["backends"][kind];
        if (!b) continue;
        const std::string transport = get<std::string>(b["transport"], "mock", "transport");
        const bool has_url = static_cast<bool>(b["url"]);
        const bool has_cmd = static_cast<bool>(b["command"]);
        if (has_url && has_cmd) {
            fail(ErrorCode::InvalidArgument, "config: backend " + kind + " sets both url and command");
        }
        e.timeout_s = get<double>(b["timeout"], e.timeout_s, "timeout");
        if (!(e.timeout_s > 0.0)) fail(ErrorCode::InvalidArgument, "config: timeout must be positive");
        if (transport == "mock") {
            if (has_url || has_cmd) fail(ErrorCode::InvalidArgument, "config: mock backend " + kind + " takes no url/command");
            e.transport = LocalMockTransport{};
        } else if (transport == "http") {
            if (!has_url) fail(ErrorCode::InvalidArgument, "config: http backend " + kind + " needs a url");
            e.transport = HttpTransport{get<std::string>(b["url"], "", "url")};
        } else if (transport == "subprocess") {
            if (!has_cmd) fail(ErrorCode::InvalidArgument, "config: subprocess backend " + kind + " needs a command");
            e.transport = SubprocessTransport{get<std::string>(b["command"], "", "command")};
        } else {
            fail(ErrorCode::InvalidArgument, "config: unknown transport '" + transport + "'");
        }
    }

    const auto sv = root["serve"];
    c.host = get<std::string>(sv["host"], c.host, "host");
    c.port = get<int>(sv["port"], c.port, "port");
    c.studio_dir = get<std::string>(sv["studio_dir"], c.studio_dir.string(), "studio_dir");

    for (ClientEndpoint& e : c.endpoints) {
        const auto it = env.find("FORGE_BACKEND_" + upper(to_string(e.kind)) + "_URL");
        if (it != env.end() && !it->second.empty()) e.transport = HttpTransport{it->second};
    }
    return c;
}

Config load_config(const std::optional<std::filesystem::path>& file, const Environment& env) {
    if (!file) return parse_config("", env);
    const Bytes raw = read_file(*file);
    return parse_config(std::string(raw.begin(), raw.end()), env);
}

ClientSet make_clients(const Config& config) { return make_clients(config.endpoints, config.thresholds); }

nlohmann::json describe_endpoints(const Config& config) {
    nlohmann::json out = nlohmann::json::array();
    for (const ClientEndpoint& e : config.endpoints) out.push_back(e.describe());
    return out;
}

}  // namespace forge
