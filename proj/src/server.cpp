#include "buoytrack/server.hpp"

#include <cmath>

namespace buoytrack::service {

void ServerConfig::validate() const {
    if (tcp_port != 0 && tcp_port == http_port) {
        throw std::invalid_argument("tcp and http ports must differ (both " + std::to_string(tcp_port) + ")");
    }
    if (data_dir.empty()) throw std::invalid_argument("data directory must be set");
    if (idle_timeout_s <= 0) throw std::invalid_argument("idle timeout must be positive");
    if (online_window_s <= 0) throw std::invalid_argument("online window must be positive");
    if (!(boundary_epsilon >= 0.0) || !std::isfinite(boundary_epsilon)) {
        throw std::invalid_argument("boundary epsilon must be a finite non-negative number");
    }
    if (web_root && !std::filesystem::is_directory(*web_root)) {
        throw std::invalid_argument("web root " + web_root->string() + " is not a directory");
    }
}

namespace {

const ServerConfig& validated(const ServerConfig& c) {
    c.validate();
    return c;
}

}  // namespace

Server::Server(ServerConfig config)
    : config_(validated(config)),
      store_(config_.data_dir, store::StoreOptions{.fsync = config_.fsync}),
      pipeline_(store_, hub_, PipelineOptions{config_.boundary_epsilon}),
      tcp_(pipeline_, TcpOptions{config_.bind_address, config_.tcp_port, config_.idle_timeout_s}),
      http_(pipeline_, hub_,
            HttpOptions{.bind_address = config_.bind_address,
                        .port = config_.http_port,
                        .online_window_s = config_.online_window_s,
                        .web_root = config_.web_root}) {}

Server::~Server() { stop(); }

void Server::start() {
    tcp_.start();
    try {
        http_.start();
    } catch (...) {
        tcp_.stop();
        throw;
    }
    running_ = true;
}

void Server::stop() {
    if (!running_) return;
    running_ = false;
    tcp_.stop();
    // Live streams end once their subscriptions close; then HTTP can drain.
    hub_.close_all();
    http_.stop();
}

}  // namespace buoytrack::service
