#pragma once

// The control center: store + pipeline + live hub + TCP listener + HTTP API.

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>

#include "buoytrack/http_api.hpp"
#include "buoytrack/live.hpp"
#include "buoytrack/pipeline.hpp"
#include "buoytrack/store.hpp"
#include "buoytrack/tcp_server.hpp"

namespace buoytrack::service {

struct ServerConfig {
    std::string bind_address = "0.0.0.0";
    std::uint16_t tcp_port = wire::kDefaultPort;
    std::uint16_t http_port = kDefaultHttpPort;
    std::filesystem::path data_dir = "data";
    std::int64_t idle_timeout_s = wire::kIdleTimeoutSeconds;
    std::int64_t online_window_s = store::kDefaultOnlineWindowSeconds;
    double boundary_epsilon = geofence::kBoundaryEpsilon;
    std::optional<std::filesystem::path> web_root;
    bool fsync = true;

    /// Throws std::invalid_argument describing the first bad field.
    void validate() const;
};

class Server {
public:
    explicit Server(ServerConfig config);
    ~Server();

    Server(const Server&) = delete;
    Server& operator=(const Server&) = delete;

    void start();
    /// Idempotent.
    void stop();

    [[nodiscard]] std::uint16_t tcp_port() const { return tcp_.port(); }
    [[nodiscard]] std::uint16_t http_port() const { return http_.port(); }
    [[nodiscard]] store::Store& store() { return store_; }
    [[nodiscard]] LiveHub& hub() { return hub_; }
    [[nodiscard]] const ServerConfig& config() const { return config_; }

private:
    ServerConfig config_;
    store::Store store_;
    LiveHub hub_;
    Pipeline pipeline_;
    TcpServer tcp_;
    HttpApi http_;
    bool running_ = false;
};

}  // namespace buoytrack::service
