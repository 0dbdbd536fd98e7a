#include "forge/transport.hpp"

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <chrono>
#include <cerrno>
#include <cstring>
#include <mutex>

#include <httplib.h>

#include "forge/codec.hpp"

namespace forge {

using nlohmann::json;

std::string ClientEndpoint::transport_name() const {
    switch (transport.index()) {
        case 1: return "http";
        case 2: return "subprocess";
        default: return "mock";
    }
}

json ClientEndpoint::describe() const {
    json j{{"kind", to_string(kind)}, {"transport", transport_name()}, {"timeout", timeout_s}};
    if (const auto* h = std::get_if<HttpTransport>(&transport)) j["url"] = h->base_url;
    if (const auto* s = std::get_if<SubprocessTransport>(&transport)) j["command"] = s->command;
    return j;
}

// ---- payloads --------------------------------------------------------------------

json encode_payload(const Bytes& bytes, const std::string& format) {
    return json{{"format", format}, {"encoding", "base64"}, {"data", base64_encode(bytes)}};
}

Bytes decode_payload(const json& j, const std::string& format) {
    if (!j.is_object()) fail(ErrorCode::MalformedResponse, "payload must be an object");
    if (j.value("format", std::string()) != format) {
        fail(ErrorCode::MalformedResponse, "expected a " + format + " payload");
    }
    if (j.value("encoding", std::string()) != "base64") {
        fail(ErrorCode::MalformedResponse, "unresolved payload encoding '" + j.value("encoding", std::string()) + "'");
    }
    return base64_decode(j.at("data").get<std::string>());
}

json image_payload(const Image& image) { return encode_payload(encode_png(image), "png"); }
json depth_payload(const DepthMap& depth) { return encode_payload(encode_pfm(depth.raster()), "pfm"); }
json mask_payload(const Mask& mask) { return encode_payload(encode_mask_png(mask), "png"); }

Image payload_image(const json& j) { return decode_png(decode_payload(j, "png")); }
DepthMap payload_depth(const json& j) { return DepthMap(decode_pfm(decode_payload(j, "pfm"))); }
Mask payload_mask(const json& j) { return decode_mask_png(decode_payload(j, "png")); }

// ---- requests ----------------------------------------------------------------------

json depth_request(const Image& image) { return json{{"image", image_payload(image)}}; }

json segment_request(const Image& image, const std::optional<BBox>& hint) {
    json j{{"image", image_payload(image)}, {"hint", nullptr}};
    if (hint) j["hint"] = *hint;
    return j;
}

json inpaint_request(const Image& image, const Mask& mask) {
    return json{{"image", image_payload(image)}, {"mask", mask_payload(mask)}};
}

json locate_request(const Image& background, const DepthMap& depth, const std::string& instruction,
                    const SceneAnnotation* annotations) {
    json j{{"background", image_payload(background)},
           {"depth", depth_payload(depth)},
           {"instruction", instruction},
           {"annotations", nullptr}};
    if (annotations != nullptr) j["annotations"] = *annotations;
    return j;
}

json composite_request(const ConditioningBundle& b) {
    validate(b);
    return json{{"meta", bundle_meta(b)},
                {"masked_scene", image_payload(b.masked_scene)},
                {"collage", image_payload(b.collage)},
                {"fused_depth", depth_payload(b.fused_depth)},
                {"reference", image_payload(b.reference_crop)},
                {"object_depth", depth_payload(b.object_depth)},
                {"placed_mask", mask_payload(b.placed_mask)},
                {"scene_mask", mask_payload(b.scene_mask)}};
}

// ---- responses ---------------------------------------------------------------------

json error_body(ErrorCode code, const std::string& message) {
    return json{{"error", {{"code", to_string(code)}, {"message", message}}}};
}

void rethrow_error_body(const json& j) {
    const auto& e = j.at("error");
    const std::string name = e.value("code", std::string());
    const std::string message = e.value("message", std::string());
    fail(parse_error_code(name).value_or(ErrorCode::BackendUnavailable), message);
}

namespace {

template <typename F>
auto decode_response(const json& j, F&& f) -> decltype(f()) {
    if (j.is_object() && j.contains("error")) rethrow_error_body(j);
    try {
        return f();
    } catch (const json::exception& e) {
        fail(ErrorCode::MalformedResponse, e.what());
    } catch (const Error& e) {
        if (e.code() == ErrorCode::MalformedResponse) throw;
        fail(ErrorCode::MalformedResponse, e.what());
    }
}

}  // namespace

DepthMap depth_response(const json& j) {
    return decode_response(j, [&] { return payload_depth(j.at("depth")); });
}

Mask segment_response(const json& j) {
    return decode_response(j, [&] { return payload_mask(j.at("mask")); });
}

Image inpaint_response(const json& j) {
    return decode_response(j, [&] { return payload_image(j.at("image")); });
}

LocateResponse locate_response(const json& j) {
    return decode_response(j, [&] {
        const Location25D raw = j.at("location").get<Location25D>();
        return LocateResponse{Location25D::make(raw.bbox, raw.depth), j.value("raw_text", std::string())};
    });
}

Image composite_response(const json& j) {
    return decode_response(j, [&] { return payload_image(j.at("image")); });
}

// ---- backend side -------------------------------------------------------------------

namespace {

ConditioningBundle bundle_from_request(const json& r) {
    ConditioningBundle b = bundle_from_meta(r.at("meta"));
    b.masked_scene = payload_image(r.at("masked_scene"));
    b.collage = payload_image(r.at("collage"));
    b.fused_depth = payload_depth(r.at("fused_depth"));
    b.reference_crop = payload_image(r.at("reference"));
    b.object_depth = payload_depth(r.at("object_depth"));
    const MaskKind pk = b.placed_mask.kind(), sk = b.scene_mask.kind();
    b.placed_mask = payload_mask(r.at("placed_mask"));
    b.placed_mask.set_kind(pk);
    b.scene_mask = payload_mask(r.at("scene_mask"));
    b.scene_mask.set_kind(sk);
    return b;
}

}  // namespace

json handle_backend_request(ClientKind kind, const json& r, const ClientSet& impl) {
    try {
        switch (kind) {
            case ClientKind::depth:
                return json{{"depth", depth_payload(impl.depth->predict(payload_image(r.at("image"))))}};
            case ClientKind::segment: {
                std::optional<BBox> hint;
                if (r.contains("hint") && !r.at("hint").is_null()) hint = r.at("hint").get<BBox>();
                return json{{"mask", mask_payload(impl.segment->segment(payload_image(r.at("image")), hint))}};
            }
            case ClientKind::inpaint:
                return json{{"image", image_payload(impl.inpaint->remove(payload_image(r.at("image")),
                                                                         payload_mask(r.at("mask"))))}};
            case ClientKind::locate: {
                std::optional<SceneAnnotation> ann;
                if (r.contains("annotations") && !r.at("annotations").is_null()) {
                    ann = r.at("annotations").get<SceneAnnotation>();
                }
                const LocateResponse res =
                    impl.locate->locate(payload_image(r.at("background")), payload_depth(r.at("depth")),
                                        r.at("instruction").get<std::string>(), ann ? &*ann : nullptr);
                return json{{"location", res.location}, {"raw_text", res.raw_text}};
            }
            case ClientKind::composite:
                return json{{"image", image_payload(impl.composite->compose(bundle_from_request(r)))}};
        }
    } catch (const Error& e) {
        return error_body(e.code(), e.message());
    } catch (const json::exception& e) {
        return error_body(ErrorCode::SchemaViolation, e.what());
    }
    return error_body(ErrorCode::InvalidArgument, "unknown kind");
}

// ---- multipart --------------------------------------------------------------------

namespace {

void split_walk(json& node, std::vector<std::pair<std::string, Bytes>>& parts) {
    if (node.is_object()) {
        if (node.contains("encoding") && node["encoding"] == "base64" && node.contains("data")) {
            const std::string name = "p" + std::to_string(parts.size());
            parts.emplace_back(name, base64_decode(node["data"].get<std::string>()));
            node.erase("data");
            node["encoding"] = "part";
            node["part"] = name;
            return;
        }
        for (auto& [key, value] : node.items()) split_walk(value, parts);
    } else if (node.is_array()) {
        for (auto& value : node) split_walk(value, parts);
    }
}

void join_walk(json& node, const std::function<const Bytes*(const std::string&)>& part) {
    if (node.is_object()) {
        if (node.contains("encoding") && node["encoding"] == "part") {
            const std::string name = node.value("part", std::string());
            const Bytes* bytes = part(name);
            if (bytes == nullptr) fail(ErrorCode::SchemaViolation, "missing multipart part '" + name + "'");
            node.erase("part");
            node["encoding"] = "base64";
            node["data"] = base64_encode(*bytes);
            return;
        }
        for (auto& [key, value] : node.items()) join_walk(value, part);
    } else if (node.is_array()) {
        for (auto& value : node) join_walk(value, part);
    }
}

}  // namespace

MultipartBody split_parts(const json& request) {
    MultipartBody out{request, {}};
    split_walk(out.request, out.parts);
    return out;
}

json join_parts(const json& request, const std::function<const Bytes*(const std::string&)>& part) {
    json out = request;
    join_walk(out, part);
    return out;
}

// ---- channels ------------------------------------------------------------------------

namespace {

json parse_reply(const std::string& body, const std::string& where) {
    try {
        return json::parse(body);
    } catch (const json::exception&) {
        fail(ErrorCode::MalformedResponse, where + " returned a non-JSON body");
    }
}

std::pair<std::string, std::string> split_url(const std::string& url) {
    const std::size_t scheme = url.find("://");
    const std::size_t path = url.find('/', scheme == std::string::npos ? 0 : scheme + 3);
    if (path == std::string::npos) return {url, ""};
    std::string prefix = url.substr(path);
    while (!prefix.empty() && prefix.back() == '/') prefix.pop_back();
    return {url.substr(0, path), prefix};
}

}  // namespace

json http_call(const HttpTransport& t, ClientKind kind, const json& request, double timeout_s) {
    const auto [host, prefix] = split_url(t.base_url);
    httplib::Client client(host);
    if (!client.is_valid()) fail(ErrorCode::BackendUnavailable, "invalid backend url '" + t.base_url + "'");
    const auto usec = [](double s) { return std::chrono::microseconds(static_cast<long long>(s * 1e6)); };
    client.set_connection_timeout(usec(timeout_s));
    client.set_read_timeout(usec(timeout_s));
    client.set_write_timeout(usec(timeout_s));

    const std::string path = prefix + "/v1/" + std::string(to_string(kind));
    std::string body = request.dump();
    httplib::Result res;
    if (body.size() > kMultipartThreshold) {
        MultipartBody mp = split_parts(request);
        httplib::MultipartFormDataItems items;
        items.push_back({"request", mp.request.dump(), "", "application/json"});
        for (auto& [name, bytes] : mp.parts) {
            items.push_back({name, std::string(bytes.begin(), bytes.end()), name, "application/octet-stream"});
        }
        res = client.Post(path, items);
    } else {
        res = client.Post(path, body, "application/json");
    }
    if (!res) {
        const auto err = res.error();
        if (err == httplib::Error::Read || err == httplib::Error::Write || err == httplib::Error::ConnectionTimeout) {
            fail(ErrorCode::Timeout, t.base_url + ": " + httplib::to_string(err));
        }
        fail(ErrorCode::BackendUnavailable, t.base_url + ": " + httplib::to_string(err));
    }
    if (res->status != 200) {
        json err;
        try {
            err = json::parse(res->body);
        } catch (const json::exception&) {
            fail(ErrorCode::BackendUnavailable, t.base_url + " answered HTTP " + std::to_string(res->status));
        }
        if (err.is_object() && err.contains("error")) rethrow_error_body(err);
        fail(ErrorCode::BackendUnavailable, t.base_url + " answered HTTP " + std::to_string(res->status));
    }
    return parse_reply(res->body, t.base_url);
}

json subprocess_call(const SubprocessTransport& t, ClientKind kind, const json& request, double timeout_s) {
    static std::once_flag ignore_sigpipe;
    std::call_once(ignore_sigpipe, [] { ::signal(SIGPIPE, SIG_IGN); });

    int in_pipe[2], out_pipe[2];
    if (::pipe2(in_pipe, O_CLOEXEC) != 0) fail(ErrorCode::BackendUnavailable, "pipe: " + std::string(std::strerror(errno)));
    if (::pipe2(out_pipe, O_CLOEXEC) != 0) {
        ::close(in_pipe[0]);
        ::close(in_pipe[1]);
        fail(ErrorCode::BackendUnavailable, "pipe: " + std::string(std::strerror(errno)));
    }
    std::string kind_env = "FORGE_CLIENT_KIND=" + std::string(to_string(kind));
    const pid_t pid = ::fork();
    if (pid < 0) fail(ErrorCode::BackendUnavailable, "fork: " + std::string(std::strerror(errno)));
    if (pid == 0) {
        ::setpgid(0, 0);  // own group, so a timeout also kills whatever the shell spawned
        ::dup2(in_pipe[0], STDIN_FILENO);
        ::dup2(out_pipe[1], STDOUT_FILENO);
        ::putenv(kind_env.data());
        ::execl("/bin/sh", "sh", "-c", t.command.c_str(), static_cast<char*>(nullptr));
        ::_exit(127);
    }
    ::close(in_pipe[0]);
    ::close(out_pipe[1]);
    int to_child = in_pipe[1];
    const int from_child = out_pipe[0];
    ::fcntl(to_child, F_SETFL, O_NONBLOCK);

    const std::string body = request.dump();
    std::size_t written = 0;
    std::string reply;
    const auto deadline = std::chrono::steady_clock::now() + std::chrono::duration<double>(timeout_s);
    bool timed_out = false;
    for (;;) {
        const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - std::chrono::steady_clock::now());
        if (left.count() <= 0) {
            timed_out = true;
            break;
        }
        pollfd fds[2] = {{from_child, POLLIN, 0}, {to_child, POLLOUT, 0}};
        const int n = ::poll(fds, to_child >= 0 ? 2 : 1, static_cast<int>(left.count()));
        if (n < 0 && errno == EINTR) continue;
        if (n == 0) continue;
        if (to_child >= 0 && (fds[1].revents & (POLLOUT | POLLERR | POLLHUP))) {
            const ssize_t w = ::write(to_child, body.data() + written, body.size() - written);
            if (w > 0) written += static_cast<std::size_t>(w);
            if (w < 0 && errno != EAGAIN) written = body.size();
            if (written == body.size()) {
                ::close(to_child);
                to_child = -1;
            }
        }
        if (fds[0].revents & (POLLIN | POLLHUP | POLLERR)) {
            char buf[65536];
            const ssize_t r = ::read(from_child, buf, sizeof buf);
            if (r > 0) {
                reply.append(buf, static_cast<std::size_t>(r));
            } else if (r == 0 || errno != EAGAIN) {
                break;
            }
        }
    }
    if (to_child >= 0) ::close(to_child);
    ::close(from_child);
    if (timed_out) {
        ::setpgid(pid, pid);  // in case the child has not run setpgid yet
        ::kill(-pid, SIGKILL);
    }
    int status = 0;
    ::waitpid(pid, &status, 0);
    if (timed_out) fail(ErrorCode::Timeout, "backend command exceeded " + std::to_string(timeout_s) + " s");
    if (reply.empty()) {
        fail(ErrorCode::BackendUnavailable,
             "backend command produced no output (exit " + std::to_string(WIFEXITED(status) ? WEXITSTATUS(status) : -1) + ")");
    }
    return parse_reply(reply, "backend command");
}

// ---- remote clients --------------------------------------------------------------------

namespace {

using Channel = std::function<json(const json&)>;

void expect_same_size(std::uint32_t w, std::uint32_t h, std::uint32_t ew, std::uint32_t eh, const char* what) {
    if (w != ew || h != eh) fail(ErrorCode::MalformedResponse, std::string(what) + " has the wrong size");
}

class RemoteClient final : public DepthClient,
                           public SegmentClient,
                           public InpaintClient,
                           public LocateClient,
                           public CompositeClient {
public:
    explicit RemoteClient(Channel channel) : channel_(std::move(channel)) {}

    DepthMap predict(const Image& image) override {
        DepthMap d = depth_response(channel_(depth_request(image)));
        expect_same_size(d.width(), d.height(), image.width(), image.height(), "depth map");
        return d;
    }
    Mask segment(const Image& image, const std::optional<BBox>& hint) override {
        Mask m = segment_response(channel_(segment_request(image, hint)));
        expect_same_size(m.width(), m.height(), image.width(), image.height(), "mask");
        return m;
    }
    Image remove(const Image& image, const Mask& mask) override {
        Image out = inpaint_response(channel_(inpaint_request(image, mask)));
        expect_same_size(out.width(), out.height(), image.width(), image.height(), "inpainted image");
        return out;
    }
    LocateResponse locate(const Image& background, const DepthMap& depth, const std::string& instruction,
                          const SceneAnnotation* annotations) override {
        if (instruction.empty()) fail(ErrorCode::UnparsableInstruction, "empty instruction");
        return locate_response(channel_(locate_request(background, depth, instruction, annotations)));
    }
    Image compose(const ConditioningBundle& bundle) override {
        return composite_response(channel_(composite_request(bundle)));
    }

private:
    Channel channel_;
};

std::shared_ptr<RemoteClient> remote(const ClientEndpoint& e) {
    if (const auto* h = std::get_if<HttpTransport>(&e.transport)) {
        return std::make_shared<RemoteClient>(
            [t = *h, kind = e.kind, timeout = e.timeout_s](const json& r) { return http_call(t, kind, r, timeout); });
    }
    const auto& s = std::get<SubprocessTransport>(e.transport);
    return std::make_shared<RemoteClient>(
        [t = s, kind = e.kind, timeout = e.timeout_s](const json& r) { return subprocess_call(t, kind, r, timeout); });
}

}  // namespace

ClientSet make_clients(const std::vector<ClientEndpoint>& endpoints, const RelationThresholds& thresholds) {
    ClientSet set = mock_clients(thresholds);
    for (const ClientEndpoint& e : endpoints) {
        if (std::holds_alternative<LocalMockTransport>(e.transport)) continue;
        auto client = remote(e);
        switch (e.kind) {
            case ClientKind::depth: set.depth = client; break;
            case ClientKind::segment: set.segment = client; break;
            case ClientKind::inpaint: set.inpaint = client; break;
            case ClientKind::locate: set.locate = client; break;
            case ClientKind::composite: set.composite = client; break;
        }
    }
    return set;
}

}  // namespace forge
