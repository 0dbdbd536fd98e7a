#pragma once

#include <memory>
#include <string>
#include <thread>

#include <json.hpp>

#include "forge/commands.hpp"
#include "forge/config.hpp"

namespace forge {

struct ApiResponse {
    int status = 200;
    nlohmann::json body;
};

/// One /api call without the HTTP layer. `route` is the path after /api/,
/// e.g. "fuse". Typed errors become {"error": {...}} with a 4xx/5xx status.
ApiResponse handle_api(const std::string& route, const std::string& body, const Config& config,
                       const ClientSet& clients);

/// Compose parameters from a JSON object, falling back to `defaults` per field.
ComposeParams compose_params_from_json(const nlohmann::json& j, const ComposeParams& defaults);

struct ServiceOptions {
    bool mock_backend = false;  // also answer the /v1/{kind} backend protocol with the mocks
};

/// Local HTTP service: /api/* endpoints, static files under /studio, and
/// optionally the mock backend protocol.
class Service {
public:
    Service(Config config, ServiceOptions options = {});
    ~Service();
    Service(const Service&) = delete;
    Service& operator=(const Service&) = delete;

    /// Binds host:port (port 0 picks a free one); PortInUse when taken.
    int bind();
    /// Blocks until stop().
    void run();
    /// Runs on a background thread.
    void start();
    void stop();
    int port() const noexcept { return port_; }

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
    int port_ = 0;
    std::thread thread_;
};

}  // namespace forge
