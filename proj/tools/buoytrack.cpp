// buoytrack: fleet tracking server, terminal simulator and codec utilities.

#include <csignal>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "buoytrack/json_io.hpp"
#include "buoytrack/server.hpp"
#include "buoytrack/sim_client.hpp"

using namespace buoytrack;
using json = nlohmann::json;

namespace {

// Runtime failure: one-line diagnostic, exit 1.
struct Failure : std::runtime_error {
    using std::runtime_error::runtime_error;
};

json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Failure("cannot open " + path);
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw Failure(path + ": " + e.what());
    }
}

std::int64_t now_epoch() { return static_cast<std::int64_t>(std::time(nullptr)); }

// Accepts "$BODY*hh", "BODY*hh" or a bare body.
std::string_view checksum_body(std::string_view s) {
    if (!s.empty() && s.front() == '$') s.remove_prefix(1);
    if (const auto star = s.rfind('*'); star != std::string_view::npos) s = s.substr(0, star);
    return s;
}

devicesim::Route default_route() {
    // A short loop off the Kiel lighthouse.
    return devicesim::Route{{{54.500, 10.273}, {54.520, 10.300}, {54.510, 10.340}, {54.490, 10.310}}, 6.0, 1};
}

int serve(service::ServerConfig config) {
    // Block the shutdown signals before any thread starts so only sigwait
    // below sees them.
    sigset_t signals;
    sigemptyset(&signals);
    sigaddset(&signals, SIGINT);
    sigaddset(&signals, SIGTERM);
    pthread_sigmask(SIG_BLOCK, &signals, nullptr);

    service::Server server(std::move(config));
    server.start();
    std::cout << "buoytrack: listening tcp=" << server.tcp_port() << " http=" << server.http_port()
              << " data=" << server.config().data_dir.string() << std::endl;
    int sig = 0;
    sigwait(&signals, &sig);
    std::cerr << "buoytrack: shutting down" << std::endl;
    server.stop();
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"buoytrack: marine buoy fleet tracking"};
    app.require_subcommand(1);
    std::function<int()> action;

    // serve --------------------------------------------------------------------
    service::ServerConfig cfg;
    std::string data_dir = "data";
    std::string web_root;
    bool no_fsync = false;
    auto* serve_cmd = app.add_subcommand("serve", "Run the control center (TCP ingest + HTTP API)");
    serve_cmd->add_option("--tcp-port", cfg.tcp_port, "Terminal TCP port (0 = any)")
        ->envname("BUOYTRACK_TCP_PORT")
        ->capture_default_str();
    serve_cmd->add_option("--http-port", cfg.http_port, "HTTP API port (0 = any)")
        ->envname("BUOYTRACK_HTTP_PORT")
        ->capture_default_str();
    serve_cmd->add_option("--data", data_dir, "Data directory holding the journal")
        ->envname("BUOYTRACK_DATA")
        ->capture_default_str();
    serve_cmd->add_option("--bind", cfg.bind_address, "Listen address")->capture_default_str();
    serve_cmd->add_option("--idle-timeout", cfg.idle_timeout_s, "Disconnect silent terminals after N s")
        ->capture_default_str();
    serve_cmd->add_option("--online-window", cfg.online_window_s, "Seconds a terminal counts as online")
        ->capture_default_str();
    serve_cmd->add_option("--web-root", web_root, "Serve a static console bundle from this directory");
    serve_cmd->add_flag("--no-fsync", no_fsync, "Skip fsync after journal writes");
    serve_cmd->callback([&] {
        action = [&] {
            cfg.data_dir = data_dir;
            if (!web_root.empty()) cfg.web_root = web_root;
            cfg.fsync = !no_fsync;
            return serve(cfg);
        };
    });

    // sim ------------------------------------------------------------------------
    std::string server_addr = "127.0.0.1:5023";
    std::string imei_text;
    std::string route_file;
    service::SimOptions sim;
    std::uint64_t idle_after = 0;
    std::int64_t data_request_after = -1;
    bool verbose = false;
    auto* sim_cmd = app.add_subcommand("sim", "Simulate a locator terminal reporting a route");
    sim_cmd->add_option("--server", server_addr, "host:port of the TCP listener")->capture_default_str();
    sim_cmd->add_option("--imei", imei_text, "15-digit terminal IMEI")->required();
    sim_cmd->add_option("--route", route_file, "Route JSON file (default: built-in loop)");
    sim_cmd->add_option("--count", sim.count, "Number of position reports")->capture_default_str();
    sim_cmd->add_option("--interval", sim.wall_interval_s, "Wall-clock seconds between reports")
        ->capture_default_str();
    sim_cmd->add_option("--start", sim.start_epoch, "Virtual clock start, epoch seconds (default now)");
    sim_cmd->add_option("--idle-timeout", sim.idle_timeout_s, "Power-save idle timeout, virtual seconds")
        ->capture_default_str();
    sim_cmd->add_option("--idle-after", idle_after, "Stop data requests after N reports (power-save injection)");
    sim_cmd->add_option("--data-request-after", data_request_after,
                        "Wake from power save after N virtual seconds via a data request");
    sim_cmd->add_option("--firmware", sim.firmware, "Firmware string sent at login")->capture_default_str();
    sim_cmd->add_flag("-v,--verbose", verbose, "Log state-machine transitions");
    sim_cmd->callback([&] {
        action = [&] {
            const auto colon = server_addr.rfind(':');
            if (colon == std::string::npos) throw CLI::ValidationError("--server", "expected host:port");
            sim.host = server_addr.substr(0, colon);
            sim.port = static_cast<std::uint16_t>(std::stoi(server_addr.substr(colon + 1)));
            const auto imei = wire::Imei::parse(imei_text);
            if (!imei) throw CLI::ValidationError("--imei", "must be exactly 15 digits");
            sim.imei = *imei;
            sim.route = route_file.empty() ? default_route() : json_io::route_from_json(read_json_file(route_file));
            if (idle_after > 0) sim.idle_after = idle_after;
            if (data_request_after >= 0) sim.data_request_after_s = data_request_after;
            const auto r = service::run_sim(sim, verbose ? &std::cerr : nullptr);
            for (const auto& e : r.errors) std::cerr << "buoytrack: " << e << '\n';
            std::cout << "sent=" << r.sent << " acked=" << r.acked << " logins=" << r.logins
                      << " errors=" << r.errors.size() << " phase=" << devicesim::to_string(r.final_phase)
                      << std::endl;
            return r.errors.empty() && r.acked == r.sent ? 0 : 1;
        };
    });

    // nmea -----------------------------------------------------------------------
    auto* nmea_cmd = app.add_subcommand("nmea", "GPRMC sentence tools");
    nmea_cmd->require_subcommand(1);
    std::string sentence;
    bool lenient = false;
    auto* nmea_parse = nmea_cmd->add_subcommand("parse", "Decode a sentence to JSON");
    nmea_parse->add_option("sentence", sentence)->required();
    nmea_parse->add_flag("--lenient", lenient, "Accept a wrong or missing checksum");
    nmea_parse->callback([&] {
        action = [&] {
            const auto fix = nmea::parse_gprmc(sentence, {.require_checksum = !lenient});
            std::cout << json_io::to_json(fix).dump() << '\n';
            return 0;
        };
    });
    nmea::GprmcFix gen_fix;
    double gen_lat = 0, gen_lon = 0;
    std::int64_t gen_time = 0;
    bool gen_void = false;
    auto* nmea_gen = nmea_cmd->add_subcommand("gen", "Format a sentence");
    nmea_gen->add_option("--lat", gen_lat, "Latitude, decimal degrees")->required()->check(CLI::Range(-90.0, 90.0));
    nmea_gen->add_option("--lon", gen_lon, "Longitude, decimal degrees")->required()->check(CLI::Range(-180.0, 180.0));
    nmea_gen->add_option("--time", gen_time, "Fix time, epoch seconds (default now)");
    nmea_gen->add_option("--speed", gen_fix.speed_knots, "Speed over ground, knots")->check(CLI::NonNegativeNumber);
    nmea_gen->add_option("--course", gen_fix.course_deg, "Course, degrees")->check(CLI::Range(0.0, 359.99));
    nmea_gen->add_flag("--void", gen_void, "Emit a void (no fix) sentence");
    nmea_gen->callback([&] {
        action = [&] {
            const auto [date, time] = nmea::civil_from_epoch(gen_time > 0 ? gen_time : now_epoch());
            gen_fix.date = date;
            gen_fix.utc_time = time;
            gen_fix.status = gen_void ? nmea::Status::Void : nmea::Status::Active;
            if (!gen_void) gen_fix.position = LatLon{gen_lat, gen_lon};
            std::cout << nmea::format_gprmc(gen_fix) << '\n';
            return 0;
        };
    });
    std::string body;
    auto* nmea_sum = nmea_cmd->add_subcommand("checksum", "XOR checksum of a sentence body");
    nmea_sum->add_option("body", body, "Text between '$' and '*' (either may be included)")->required();
    nmea_sum->callback([&] {
        action = [&] {
            std::cout << nmea::nmea_checksum(checksum_body(body)) << '\n';
            return 0;
        };
    });

    // pdu ------------------------------------------------------------------------
    auto* pdu_cmd = app.add_subcommand("pdu", "GSM SMS PDU tools");
    pdu_cmd->require_subcommand(1);
    std::string to_digits, text, payload_hex;
    bool international = false;
    int mr = 0;
    auto* pdu_submit = pdu_cmd->add_subcommand("encode-submit", "Build an SMS-SUBMIT PDU (8-bit data)");
    pdu_submit->add_option("--to", to_digits, "Destination digits")->required();
    pdu_submit->add_flag("--international", international, "International number (TOA 0x91)");
    pdu_submit->add_option("--mr", mr, "Message reference")->check(CLI::Range(0, 255));
    auto* text_opt = pdu_submit->add_option("--text", text, "Payload as text");
    auto* hex_opt = pdu_submit->add_option("--hex", payload_hex, "Payload as hex");
    text_opt->excludes(hex_opt);
    pdu_submit->callback([&] {
        action = [&] {
            pdu::SmsSubmit msg;
            msg.message_ref = static_cast<std::uint8_t>(mr);
            msg.dest_digits = to_digits;
            msg.type_of_address = international ? pdu::kTypeInternational : pdu::kTypeNational;
            msg.payload = payload_hex.empty() ? pdu::Bytes(text.begin(), text.end()) : pdu::from_hex(payload_hex);
            std::cout << pdu::encode_submit(msg) << '\n';
            return 0;
        };
    });
    std::string deliver_hex;
    auto* pdu_deliver = pdu_cmd->add_subcommand("decode-deliver", "Decode an SMS-DELIVER PDU to JSON");
    pdu_deliver->add_option("hex", deliver_hex)->required();
    pdu_deliver->callback([&] {
        action = [&] {
            std::cout << json_io::to_json(pdu::decode_deliver(deliver_hex)).dump() << '\n';
            return 0;
        };
    });
    std::string semi_value;
    bool semi_decode = false;
    auto* pdu_semi = pdu_cmd->add_subcommand("semi", "Semi-octet (swapped nibble) digit encoding");
    pdu_semi->add_option("value", semi_value, "Digits, or hex with --decode")->required();
    pdu_semi->add_flag("-d,--decode", semi_decode, "Decode hex back to digits");
    pdu_semi->callback([&] {
        action = [&] {
            if (!semi_decode) {
                std::cout << pdu::to_hex(pdu::encode_semi_octets(semi_value)) << '\n';
                return 0;
            }
            const auto bytes = pdu::from_hex(semi_value);
            std::size_t digits = bytes.size() * 2;
            if (!bytes.empty() && (bytes.back() & 0xF0) == 0xF0) --digits;
            std::cout << pdu::decode_semi_octets(bytes, digits) << '\n';
            return 0;
        };
    });

    // fence ----------------------------------------------------------------------
    auto* fence_cmd = app.add_subcommand("fence", "Geofence tools");
    fence_cmd->require_subcommand(1);
    std::string fence_file;
    double check_lat = 0, check_lon = 0;
    auto* fence_check = fence_cmd->add_subcommand("check", "Classify a point against a GeoJSON polygon");
    fence_check->add_option("file", fence_file, "GeoJSON Polygon, Feature or FeatureCollection")->required();
    fence_check->add_option("lat", check_lat)->required();
    fence_check->add_option("lon", check_lon)->required();
    fence_check->callback([&] {
        action = [&] {
            auto doc = read_json_file(fence_file);
            if (doc.value("type", "") == "FeatureCollection") {
                if (doc.at("features").size() != 1) throw Failure("expected exactly one feature in " + fence_file);
                doc = doc.at("features").at(0);
            }
            const auto ring = json_io::ring_from_geojson(doc);
            geofence::validate_polygon(ring);
            std::cout << geofence::to_string(geofence::point_in_polygon({check_lat, check_lon}, ring)) << '\n';
            return 0;
        };
    });

    // export ---------------------------------------------------------------------
    auto* export_cmd = app.add_subcommand("export", "Read stored data");
    export_cmd->require_subcommand(1);
    std::string export_data = "data", terminal;
    std::int64_t from = 0, to = 0;
    auto* export_track = export_cmd->add_subcommand("track", "Track points as newline-delimited JSON");
    export_track->add_option("--data", export_data, "Data directory")->envname("BUOYTRACK_DATA")->capture_default_str();
    export_track->add_option("--terminal", terminal, "Terminal name or IMEI")->required();
    export_track->add_option("--from", from, "Window start, epoch seconds")->required();
    export_track->add_option("--to", to, "Window end, epoch seconds")->required();
    export_track->callback([&] {
        action = [&] {
            if (!std::filesystem::exists(std::filesystem::path(export_data) / "journal.ndjson")) {
                throw Failure("no journal in " + export_data);
            }
            store::Store s(export_data, {.fsync = false, .read_only = true});
            for (const auto& p : s.query_track(terminal, from, to)) std::cout << json_io::to_json(p).dump() << '\n';
            return 0;
        };
    });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }
    try {
        return action();
    } catch (const CLI::ValidationError& e) {
        std::cerr << "buoytrack: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "buoytrack: error: " << e.what() << '\n';
        return 1;
    }
}
