#include "buoytrack/http_api.hpp"

#include <charconv>
#include <ctime>
#include <limits>
#include <thread>

#include <httplib.h>

#include "buoytrack/json_io.hpp"

namespace buoytrack::service {

using json = nlohmann::json;

namespace {

std::int64_t wall_now() { return static_cast<std::int64_t>(std::time(nullptr)); }

// Thrown inside handlers and turned into an error response.
struct HttpError {
    int status;
    std::string code;
    std::string message;
};

void send_json(httplib::Response& res, int status, const json& body) {
    res.status = status;
    res.set_content(body.dump(), "application/json");
}

void send_error(httplib::Response& res, const HttpError& e) {
    send_json(res, e.status, {{"code", e.code}, {"message", e.message}});
}

HttpError from_store(const store::StoreError& e) {
    using store::Errc;
    switch (e.code()) {
        case Errc::UnknownTerminal: return {404, "UNKNOWN_TERMINAL", e.what()};
        case Errc::UnknownFence: return {404, "UNKNOWN_FENCE", e.what()};
        case Errc::UnknownLabel: return {404, "UNKNOWN_LABEL", e.what()};
        case Errc::BadWindow: return {400, "BAD_WINDOW", e.what()};
        case Errc::WindowTooLarge: return {400, "WINDOW_TOO_LARGE", e.what()};
        case Errc::InvalidPoint: return {400, "INVALID_POINT", e.what()};
        case Errc::InvalidPolygon: return {400, "INVALID_POLYGON", e.what()};
        case Errc::EmptyText: return {400, "EMPTY_TEXT", e.what()};
        case Errc::TextTooLong: return {400, "TEXT_TOO_LONG", e.what()};
        case Errc::DuplicateName: return {409, "DUPLICATE_NAME", e.what()};
        case Errc::CorruptJournal:
        case Errc::Io: break;
    }
    return {500, "STORAGE", e.what()};
}

json parse_body(const httplib::Request& req) {
    try {
        return json::parse(req.body);
    } catch (const json::exception& e) {
        throw HttpError{400, "BAD_JSON", e.what()};
    }
}

std::int64_t int_param(const httplib::Request& req, const std::string& name, std::optional<std::int64_t> fallback) {
    if (!req.has_param(name)) {
        if (fallback) return *fallback;
        throw HttpError{400, "BAD_REQUEST", "missing query parameter '" + name + "'"};
    }
    const auto text = req.get_param_value(name);
    std::int64_t v = 0;
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc{} || ptr != text.data() + text.size()) {
        throw HttpError{400, "BAD_REQUEST", "query parameter '" + name + "' must be epoch seconds"};
    }
    return v;
}

std::uint64_t id_param(const httplib::Request& req) {
    const auto& text = req.path_params.at("id");
    std::uint64_t v = 0;
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc{} || ptr != text.data() + text.size()) throw HttpError{404, "NOT_FOUND", "bad id " + text};
    return v;
}

geofence::Geofence fence_from_body(const json& body) {
    try {
        return json_io::fence_from_geojson(body);
    } catch (const std::exception& e) {
        throw HttpError{400, "BAD_GEOJSON", e.what()};
    }
}

}  // namespace

struct HttpApi::Impl {
    Pipeline& pipeline;
    LiveHub& hub;
    HttpOptions options;
    httplib::Server server;
    std::thread thread;
    int port = 0;

    Impl(Pipeline& p, LiveHub& h, HttpOptions o) : pipeline(p), hub(h), options(std::move(o)) {}

    store::Store& store() { return pipeline.store(); }

    using Handler = std::function<void(const httplib::Request&, httplib::Response&)>;

    // Wraps a handler with the error mapping shared by every endpoint.
    static httplib::Server::Handler guarded(Handler h) {
        return [h = std::move(h)](const httplib::Request& req, httplib::Response& res) {
            try {
                h(req, res);
            } catch (const HttpError& e) {
                send_error(res, e);
            } catch (const store::StoreError& e) {
                send_error(res, from_store(e));
            } catch (const json::exception& e) {
                send_error(res, {400, "BAD_REQUEST", e.what()});
            } catch (const std::exception& e) {
                send_error(res, {500, "INTERNAL", e.what()});
            }
        };
    }

    void routes() {
        server.Get("/api/health", guarded([](const httplib::Request&, httplib::Response& res) { send_json(res, 200, {{"ok", true}}); }));

        server.Get("/api/terminals", guarded([this](const httplib::Request&, httplib::Response& res) {
                       json out = json::array();
                       for (const auto& t : store().terminals(wall_now(), options.online_window_s)) {
                           out.push_back(json_io::to_json(t));
                       }
                       send_json(res, 200, out);
                   }));

        server.Patch("/api/terminals/:ref", guarded([this](const httplib::Request& req, httplib::Response& res) {
                         const auto body = parse_body(req);
                         const auto t = store().find_terminal(req.path_params.at("ref"));
                         if (!t) throw HttpError{404, "UNKNOWN_TERMINAL", req.path_params.at("ref")};
                         send_json(res, 200,
                                   json_io::to_json(store().rename_terminal(t->imei, body.at("name").get<std::string>())));
                     }));

        server.Get("/api/terminals/:ref/track", guarded([this](const httplib::Request& req, httplib::Response& res) {
                       const auto& ref = req.path_params.at("ref");
                       const auto from = int_param(req, "from", std::nullopt);
                       const auto to = int_param(req, "to", std::nullopt);
                       json points = json::array();
                       for (const auto& p : store().query_track(ref, from, to)) points.push_back(json_io::to_json(p));
                       const auto t = store().find_terminal(ref);
                       send_json(res, 200,
                                 {{"terminal", json_io::to_json(*t)}, {"from", from}, {"to", to}, {"points", points}});
                   }));

        server.Get("/api/fences", guarded([this](const httplib::Request&, httplib::Response& res) {
                       json features = json::array();
                       for (const auto& f : store().list_fences()) features.push_back(json_io::to_geojson(f));
                       send_json(res, 200, {{"type", "FeatureCollection"}, {"features", features}});
                   }));

        server.Post("/api/fences", guarded([this](const httplib::Request& req, httplib::Response& res) {
                        auto fence = fence_from_body(parse_body(req));
                        fence.id = 0;
                        send_json(res, 201, json_io::to_geojson(pipeline.save_fence(std::move(fence))));
                    }));

        server.Put("/api/fences/:id", guarded([this](const httplib::Request& req, httplib::Response& res) {
                       auto fence = fence_from_body(parse_body(req));
                       fence.id = id_param(req);
                       send_json(res, 200, json_io::to_geojson(pipeline.save_fence(std::move(fence))));
                   }));

        server.Patch("/api/fences/:id", guarded([this](const httplib::Request& req, httplib::Response& res) {
                         const auto body = parse_body(req);
                         send_json(res, 200,
                                   json_io::to_geojson(pipeline.set_fence_armed(id_param(req), body.at("armed").get<bool>())));
                     }));

        server.Delete("/api/fences/:id", guarded([this](const httplib::Request& req, httplib::Response& res) {
                          pipeline.delete_fence(id_param(req));
                          res.status = 204;
                      }));

        server.Get("/api/labels", guarded([this](const httplib::Request&, httplib::Response& res) {
                       json out = json::array();
                       for (const auto& l : store().list_labels()) out.push_back(json_io::to_json(l));
                       send_json(res, 200, out);
                   }));

        server.Post("/api/labels", guarded([this](const httplib::Request& req, httplib::Response& res) {
                        const auto body = parse_body(req);
                        const LatLon at{body.at("lat").get<double>(), body.at("lon").get<double>()};
                        send_json(res, 201,
                                  json_io::to_json(store().save_label(at, body.at("text").get<std::string>(), wall_now())));
                    }));

        server.Delete("/api/labels/:id", guarded([this](const httplib::Request& req, httplib::Response& res) {
                          store().delete_label(id_param(req));
                          res.status = 204;
                      }));

        server.Get("/api/alarms", guarded([this](const httplib::Request& req, httplib::Response& res) {
                       const auto from = int_param(req, "from", 0);
                       const auto to = int_param(req, "to", std::numeric_limits<std::int64_t>::max());
                       json out = json::array();
                       for (const auto& a : store().list_alarms(from, to)) out.push_back(json_io::to_json(a));
                       send_json(res, 200, out);
                   }));

        server.Get("/ws/live", [this](const httplib::Request&, httplib::Response& res) { stream_live(res); });

        if (options.web_root) server.set_mount_point("/", options.web_root->string());
    }

    // Server-sent events: one "event:" per LiveEvent, comment lines as
    // keepalives. The subscription exists before the first byte is sent.
    void stream_live(httplib::Response& res) {
        auto sub = hub.subscribe();
        res.set_header("Cache-Control", "no-cache");
        res.set_chunked_content_provider(
            "text/event-stream",
            [this, sub](std::size_t offset, httplib::DataSink& sink) {
                if (offset == 0) {
                    const std::string hello =
                        "retry: 2000\nevent: hello\ndata: " + json{{"server_time", wall_now()}}.dump() + "\n\n";
                    return sink.write(hello.data(), hello.size());
                }
                auto e = sub->next(std::chrono::seconds(1));
                if (!e) {
                    if (sub->closed()) {
                        sink.done();
                        return true;
                    }
                    static constexpr std::string_view keepalive = ": keepalive\n\n";
                    return sink.write(keepalive.data(), keepalive.size());
                }
                const std::string msg =
                    "event: " + std::string(to_string(e->type)) + "\ndata: " + to_json(*e).dump() + "\n\n";
                return sink.write(msg.data(), msg.size());
            },
            [this, sub](bool) { hub.unsubscribe(sub); });
    }
};

HttpApi::HttpApi(Pipeline& pipeline, LiveHub& hub, HttpOptions options)
    : impl_(std::make_unique<Impl>(pipeline, hub, std::move(options))) {}

HttpApi::~HttpApi() { stop(); }

void HttpApi::start() {
    auto& s = impl_->server;
    const auto threads = impl_->options.worker_threads;
    s.new_task_queue = [threads] { return new httplib::ThreadPool(threads); };
    s.set_payload_max_length(impl_->options.max_body_bytes);
    s.set_default_headers({{"Access-Control-Allow-Origin", "*"}});
    s.Options(R"(/api/.*)", [](const httplib::Request&, httplib::Response& res) {
        res.set_header("Access-Control-Allow-Methods", "GET, POST, PUT, PATCH, DELETE");
        res.set_header("Access-Control-Allow-Headers", "Content-Type");
        res.status = 204;
    });
    s.set_error_handler([](const httplib::Request&, httplib::Response& res) {
        if (!res.body.empty()) return;
        const std::string code = res.status == 413 ? "PAYLOAD_TOO_LARGE" : res.status == 404 ? "NOT_FOUND" : "HTTP_ERROR";
        send_json(res, res.status, {{"code", code}, {"message", httplib::status_message(res.status)}});
    });
    impl_->routes();

    const auto& host = impl_->options.bind_address;
    if (impl_->options.port == 0) {
        impl_->port = s.bind_to_any_port(host);
        if (impl_->port <= 0) throw std::runtime_error("cannot bind http port on " + host);
    } else {
        if (!s.bind_to_port(host, impl_->options.port)) {
            throw std::runtime_error("cannot bind http port " + std::to_string(impl_->options.port));
        }
        impl_->port = impl_->options.port;
    }
    impl_->thread = std::thread([this] { impl_->server.listen_after_bind(); });
    impl_->server.wait_until_ready();
}

void HttpApi::stop() {
    if (!impl_ || !impl_->thread.joinable()) return;
    impl_->server.stop();
    impl_->thread.join();
}

std::uint16_t HttpApi::port() const { return static_cast<std::uint16_t>(impl_->port); }

}  // namespace buoytrack::service
