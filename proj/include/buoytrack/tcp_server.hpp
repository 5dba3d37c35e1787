#pragma once

// Terminal-facing TCP listener speaking the line protocol. One thread per
// connection; replies go out only after the pipeline has persisted the
// frame's effects.

#include <atomic>
#include <cstdint>
#include <list>
#include <memory>
#include <mutex>
#include <string>
#include <thread>

#include "buoytrack/pipeline.hpp"

namespace buoytrack::service {

struct TcpOptions {
    std::string bind_address = "0.0.0.0";
    std::uint16_t port = wire::kDefaultPort;  // 0 picks an ephemeral port
    std::int64_t idle_timeout_s = wire::kIdleTimeoutSeconds;
};

class TcpServer {
public:
    TcpServer(Pipeline& pipeline, TcpOptions options);
    ~TcpServer();

    TcpServer(const TcpServer&) = delete;
    TcpServer& operator=(const TcpServer&) = delete;

    /// Binds and starts accepting. Throws std::system_error on bind failure.
    void start();
    void stop();
    [[nodiscard]] std::uint16_t port() const { return port_; }
    [[nodiscard]] std::size_t connection_count() const;

private:
    struct Connection {
        int fd = -1;
        std::thread thread;
        std::atomic<bool> done{false};
    };

    void accept_loop();
    void serve(Connection& conn);
    void reap(bool all);

    Pipeline& pipeline_;
    TcpOptions options_;
    int listen_fd_ = -1;
    std::uint16_t port_ = 0;
    std::atomic<bool> stopping_{false};
    std::thread accept_thread_;
    mutable std::mutex conns_mutex_;
    std::list<std::unique_ptr<Connection>> conns_;
};

}  // namespace buoytrack::service
