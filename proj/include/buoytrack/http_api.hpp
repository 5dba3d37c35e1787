#pragma once

// JSON API for the operator console plus the live push channel.
//
//   GET    /api/health
//   GET    /api/terminals
//   PATCH  /api/terminals/{ref}              {"name": "..."}
//   GET    /api/terminals/{ref}/track?from=&to=
//   GET    /api/fences                       GeoJSON FeatureCollection
//   POST   /api/fences                       GeoJSON Feature (Polygon)
//   PUT    /api/fences/{id}
//   PATCH  /api/fences/{id}                  {"armed": bool}
//   DELETE /api/fences/{id}
//   GET    /api/labels
//   POST   /api/labels                       {"lat", "lon", "text"}
//   DELETE /api/labels/{id}
//   GET    /api/alarms?from=&to=
//   GET    /ws/live                          server-sent events
//
// Errors are {"code": "...", "message": "..."} with a 4xx/5xx status.

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>

#include "buoytrack/live.hpp"
#include "buoytrack/pipeline.hpp"

namespace buoytrack::service {

inline constexpr std::uint16_t kDefaultHttpPort = 8080;

struct HttpOptions {
    std::string bind_address = "0.0.0.0";
    std::uint16_t port = kDefaultHttpPort;  // 0 picks an ephemeral port
    std::int64_t online_window_s = store::kDefaultOnlineWindowSeconds;
    std::optional<std::filesystem::path> web_root;  // static console bundle served under /
    std::size_t max_body_bytes = 1 << 20;
    std::size_t worker_threads = 64;  // each live subscriber holds one
};

class HttpApi {
public:
    HttpApi(Pipeline& pipeline, LiveHub& hub, HttpOptions options);
    ~HttpApi();

    HttpApi(const HttpApi&) = delete;
    HttpApi& operator=(const HttpApi&) = delete;

    /// Binds and starts serving on a background thread. Throws
    /// std::runtime_error if the port cannot be bound.
    void start();
    void stop();
    [[nodiscard]] std::uint16_t port() const;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

}  // namespace buoytrack::service
