#include "forge/service.hpp"

#include <atomic>
#include <filesystem>
#include <random>

#include <httplib.h>

#include "forge/transport.hpp"

namespace forge {

namespace fs = std::filesystem;
using nlohmann::json;

ComposeParams compose_params_from_json(const json& j, const ComposeParams& d) {
    ComposeParams p = d;
    if (!j.is_object()) fail(ErrorCode::SchemaViolation, "params must be an object");
    if (j.contains("instruction") && !j["instruction"].is_null()) p.instruction = j["instruction"].get<std::string>();
    if (j.contains("location") && !j["location"].is_null()) p.location = j["location"].get<Location25D>();
    if (j.contains("mode")) p.mode = parse_fusion_mode(j["mode"].get<std::string>());
    if (j.contains("occlusion")) p.occlusion = parse_occlusion_rule(j["occlusion"].get<std::string>());
    p.mask_level = j.value("mask_level", p.mask_level);
    p.lambda = j.value("lambda", p.lambda);
    p.guidance_scale = j.value("guidance_scale", p.guidance_scale);
    p.alpha = j.value("alpha", p.alpha);
    p.zoom_ratio = j.value("zoom_ratio", p.zoom_ratio);
    p.target_resolution = j.value("target_resolution", p.target_resolution);
    p.dilate_fraction = j.value("dilate_fraction", p.dilate_fraction);
    p.seed = j.value("seed", p.seed);
    p.drop = j.value("drop", p.drop);
    return p;
}

namespace {

Bytes b64(const json& j, const char* key) {
    if (!j.contains(key) || !j[key].is_string()) fail(ErrorCode::SchemaViolation, std::string("missing field '") + key + "'");
    return base64_decode(j[key].get<std::string>());
}

std::optional<Bytes> b64_opt(const json& j, const char* key) {
    if (!j.contains(key) || j[key].is_null()) return std::nullopt;
    return b64(j, key);
}

Location25D location_field(const json& j) {
    if (!j.contains("location")) fail(ErrorCode::SchemaViolation, "missing field 'location'");
    const Location25D raw = j["location"].get<Location25D>();
    return Location25D::make(raw.bbox, raw.depth);
}

int status_for(ErrorCode code) {
    switch (code) {
        case ErrorCode::BackendUnavailable: return 502;
        case ErrorCode::Timeout: return 504;
        case ErrorCode::IoFailure: return 500;
        default: return 400;
    }
}

struct TempDir {
    fs::path path;
    TempDir() {
        static std::atomic<std::uint64_t> counter{0};
        std::random_device rd;
        path = fs::temp_directory_path() /
               ("forge-" + std::to_string(rd()) + "-" + std::to_string(counter++));
        fs::create_directories(path);
    }
    ~TempDir() {
        std::error_code ec;
        fs::remove_all(path, ec);
    }
};

ComposeFiles compose_files(const json& j) {
    return ComposeFiles{b64(j, "background"), b64(j, "reference"), b64_opt(j, "background_depth"),
                        b64_opt(j, "annotations"), b64_opt(j, "region")};
}

FileSet run_compose(const json& j, const Config& config, const ClientSet& clients, json& extra) {
    const ComposeInputs in = decode_compose_inputs(compose_files(j));
    const ComposeParams p = compose_params_from_json(j.value("params", json::object()), config.compose);
    TempDir tmp;
    const ComposeResult r = compose(in, p, clients, tmp.path, describe_endpoints(config));
    extra["location"] = r.location;
    extra["located"] = r.located;
    FileSet files = read_tree(tmp.path);
    files["manifest.json"] = read_file(tmp.path / "manifest.json");
    return files;
}

json dispatch(const std::string& route, const json& j, const Config& config, const ClientSet& clients) {
    json out;
    if (route == "fuse") {
        FuseArgs a{b64(j, "bg_depth"), b64(j, "obj_depth"), b64(j, "obj_mask"), location_field(j)};
        if (j.contains("mode")) a.mode = parse_fusion_mode(j["mode"].get<std::string>());
        if (j.contains("occlusion")) a.occlusion = parse_occlusion_rule(j["occlusion"].get<std::string>());
        a.alpha = j.value("alpha", a.alpha);
        const FileSet files = run_fuse(a);
        const Bytes& summary = files.at("fuse.json");
        out["summary"] = json::parse(summary.begin(), summary.end());
        out["files"] = files_to_json(files);
    } else if (route == "depth") {
        const Image image = decode_png(b64(j, "image"));
        out["files"] = files_to_json(FileSet{{"depth.pfm", encode_pfm(clients.depth->predict(image).raster())}});
    } else if (route == "detail-map" || route == "collage") {
        auto detail = [&](const json& obj) {
            return DetailArgs{b64(obj, "image"), b64_opt(obj, "mask"), obj.value("mask_level", config.compose.mask_level),
                              obj.value("dilate_fraction", config.compose.dilate_fraction)};
        };
        if (route == "detail-map") {
            out["files"] = files_to_json(run_detail_map(detail(j), clients));
        } else {
            if (!j.contains("bbox")) fail(ErrorCode::SchemaViolation, "missing field 'bbox'");
            CollageArgs a{b64(j, "scene"), std::nullopt, b64_opt(j, "hf"), j["bbox"].get<BBox>()};
            if (!a.hf) a.object = detail(j.at("object"));
            out["files"] = files_to_json(run_collage(a, clients));
        }
    } else if (route == "augment-mask") {
        AugmentArgs a{b64(j, "mask"), std::nullopt, j.value("dilate_fraction", config.compose.dilate_fraction)};
        if (j.contains("level") && !j["level"].is_null()) a.level = j["level"].get<int>();
        out["files"] = files_to_json(run_augment_mask(a));
    } else if (route == "locate") {
        LocateArgs a{b64(j, "background"), b64_opt(j, "depth"), j.value("instruction", std::string()), std::nullopt};
        if (j.contains("annotations") && !j["annotations"].is_null()) a.annotations = j["annotations"].get<SceneAnnotation>();
        const FileSet files = run_locate(a, clients);
        const Bytes& loc = files.at("location.json");
        out = json::parse(loc.begin(), loc.end());
        out["files"] = files_to_json(files);
    } else if (route == "compose") {
        out["files"] = files_to_json(run_compose(j, config, clients, out));
    } else if (route == "export-bundle") {
        const FileSet all = run_compose(j, config, clients, out);
        FileSet bundle;
        for (const auto& [name, bytes] : all) {
            if (name.rfind("bundle/", 0) == 0) bundle[name.substr(7)] = bytes;
        }
        std::string digest_input;
        for (const auto& [name, bytes] : bundle) digest_input += name + ":" + sha256_hex(bytes) + "\n";
        out["name"] = "bundle-" + sha256_hex(digest_input).substr(0, 16);
        out["files"] = files_to_json(bundle);
    } else {
        fail(ErrorCode::InvalidArgument, "unknown endpoint /api/" + route);
    }
    return out;
}

}  // namespace

ApiResponse handle_api(const std::string& route, const std::string& body, const Config& config,
                       const ClientSet& clients) {
    try {
        json j;
        try {
            j = json::parse(body.empty() ? std::string("{}") : body);
        } catch (const json::exception& e) {
            fail(ErrorCode::SchemaViolation, std::string("request is not JSON: ") + e.what());
        }
        if (!j.is_object()) fail(ErrorCode::SchemaViolation, "request must be a JSON object");
        return ApiResponse{200, dispatch(route, j, config, clients)};
    } catch (const Error& e) {
        return ApiResponse{status_for(e.code()), error_body(e.code(), e.message())};
    } catch (const json::exception& e) {
        return ApiResponse{400, error_body(ErrorCode::SchemaViolation, e.what())};
    }
}

struct Service::Impl {
    Config config;
    ServiceOptions options;
    ClientSet clients;
    ClientSet mocks;
    httplib::Server server;
};

Service::Service(Config config, ServiceOptions options) : impl_(std::make_unique<Impl>()) {
    impl_->config = std::move(config);
    impl_->options = options;
    impl_->clients = make_clients(impl_->config);
    impl_->mocks = mock_clients(impl_->config.thresholds);
    Impl& s = *impl_;
    // httplib's default adds SO_REUSEPORT, which would let a second server share the port.
    s.server.set_socket_options([](socket_t sock) {
        int yes = 1;
        ::setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, reinterpret_cast<const char*>(&yes), sizeof yes);
    });

    s.server.Get("/api/health", [](const httplib::Request&, httplib::Response& res) {
        res.set_content(json{{"status", "ok"}, {"service", "forge"}}.dump(), "application/json");
    });
    s.server.Post(R"(/api/([a-z\-]+))", [&s](const httplib::Request& req, httplib::Response& res) {
        const ApiResponse r = handle_api(req.matches[1], req.body, s.config, s.clients);
        res.status = r.status;
        res.set_content(r.body.dump(), "application/json");
    });
    if (options.mock_backend) {
        s.server.Post(R"(/v1/([a-z]+))", [&s](const httplib::Request& req, httplib::Response& res) {
            json reply;
            try {
                const ClientKind kind = parse_client_kind(std::string(req.matches[1]));
                json request;
                if (req.is_multipart_form_data()) {
                    std::map<std::string, Bytes> parts;
                    for (const auto& [name, item] : req.files) parts[name] = Bytes(item.content.begin(), item.content.end());
                    const auto it = req.files.find("request");
                    if (it == req.files.end()) fail(ErrorCode::SchemaViolation, "multipart body lacks a request part");
                    request = join_parts(json::parse(it->second.content), [&](const std::string& name) -> const Bytes* {
                        const auto p = parts.find(name);
                        return p == parts.end() ? nullptr : &p->second;
                    });
                } else {
                    request = json::parse(req.body);
                }
                reply = handle_backend_request(kind, request, s.mocks);
            } catch (const Error& e) {
                reply = error_body(e.code(), e.message());
            } catch (const json::exception& e) {
                reply = error_body(ErrorCode::SchemaViolation, e.what());
            }
            if (reply.contains("error")) {
                const auto code = parse_error_code(reply["error"].value("code", std::string()));
                res.status = status_for(code.value_or(ErrorCode::InvalidArgument));
            }
            res.set_content(reply.dump(), "application/json");
        });
    }
    if (fs::is_directory(s.config.studio_dir)) s.server.set_mount_point("/studio", s.config.studio_dir.string());
}

Service::~Service() { stop(); }

int Service::bind() {
    const Config& c = impl_->config;
    if (c.port == 0) {
        port_ = impl_->server.bind_to_any_port(c.host);
        if (port_ <= 0) fail(ErrorCode::PortInUse, "could not bind " + c.host);
    } else {
        if (!impl_->server.bind_to_port(c.host, c.port)) {
            fail(ErrorCode::PortInUse, c.host + ":" + std::to_string(c.port) + " is not available");
        }
        port_ = c.port;
    }
    return port_;
}

void Service::run() { impl_->server.listen_after_bind(); }

void Service::start() {
    thread_ = std::thread([this] { run(); });
    impl_->server.wait_until_ready();
}

void Service::stop() {
    if (impl_) impl_->server.stop();
    if (thread_.joinable()) thread_.join();
}

}  // namespace forge
