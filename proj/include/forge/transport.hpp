#pragma once

#include <functional>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "forge/clients.hpp"
#include "forge/codec.hpp"

namespace forge {

struct LocalMockTransport {};
struct HttpTransport {
    std::string base_url;  // e.g. http://127.0.0.1:9000
};
struct SubprocessTransport {
    std::string command;  // run through /bin/sh -c; one JSON request on stdin, one response on stdout
};

struct ClientEndpoint {
    ClientKind kind = ClientKind::depth;
    std::variant<LocalMockTransport, HttpTransport, SubprocessTransport> transport;
    double timeout_s = 60.0;

    std::string transport_name() const;
    nlohmann::json describe() const;
};

/// Builds one client per kind. Kinds missing from `endpoints` fall back to the local mock.
ClientSet make_clients(const std::vector<ClientEndpoint>& endpoints, const RelationThresholds& thresholds = {});

// ---- wire protocol -------------------------------------------------------------
//
// POST /v1/{kind} with a JSON body. Rasters travel as
//   {"format": "png" | "pfm", "encoding": "base64", "data": "..."}
// or, once the encoded body exceeds kMultipartThreshold, as multipart parts:
//   {"format": ..., "encoding": "part", "part": "p0"}
// Errors come back as {"error": {"code": "NoForeground", "message": "..."}}.

inline constexpr std::size_t kMultipartThreshold = std::size_t{1} << 20;

nlohmann::json encode_payload(const Bytes& bytes, const std::string& format);
Bytes decode_payload(const nlohmann::json& j, const std::string& format);

nlohmann::json image_payload(const Image& image);
nlohmann::json depth_payload(const DepthMap& depth);
nlohmann::json mask_payload(const Mask& mask);
Image payload_image(const nlohmann::json& j);
DepthMap payload_depth(const nlohmann::json& j);
Mask payload_mask(const nlohmann::json& j);

nlohmann::json depth_request(const Image& image);
nlohmann::json segment_request(const Image& image, const std::optional<BBox>& hint);
nlohmann::json inpaint_request(const Image& image, const Mask& mask);
nlohmann::json locate_request(const Image& background, const DepthMap& depth, const std::string& instruction,
                              const SceneAnnotation* annotations);
nlohmann::json composite_request(const ConditioningBundle& bundle);

// Response decoders; any shape problem raises MalformedResponse and an error
// body is rethrown with its own code.
DepthMap depth_response(const nlohmann::json& j);
Mask segment_response(const nlohmann::json& j);
Image inpaint_response(const nlohmann::json& j);
LocateResponse locate_response(const nlohmann::json& j);
Image composite_response(const nlohmann::json& j);

nlohmann::json error_body(ErrorCode code, const std::string& message);
[[noreturn]] void rethrow_error_body(const nlohmann::json& j);

/// Serves one protocol request with the given in-process clients. Errors are
/// returned as error bodies, never thrown.
nlohmann::json handle_backend_request(ClientKind kind, const nlohmann::json& request, const ClientSet& impl);

/// Moves large base64 payloads into named parts and back.
struct MultipartBody {
    nlohmann::json request;
    std::vector<std::pair<std::string, Bytes>> parts;
};
MultipartBody split_parts(const nlohmann::json& request);
nlohmann::json join_parts(const nlohmann::json& request, const std::function<const Bytes*(const std::string&)>& part);

// ---- raw channels ----------------------------------------------------------------

/// POSTs to base_url + "/v1/" + kind. Connection failures raise
/// BackendUnavailable, expired deadlines Timeout.
nlohmann::json http_call(const HttpTransport& t, ClientKind kind, const nlohmann::json& request, double timeout_s);
nlohmann::json subprocess_call(const SubprocessTransport& t, ClientKind kind, const nlohmann::json& request,
                               double timeout_s);

}  // namespace forge
