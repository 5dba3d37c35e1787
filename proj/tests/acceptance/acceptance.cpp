// Acceptance runner: one PASS/FAIL line per check. Exits nonzero if any
// check fails.

#include <httplib.h>

#include <chrono>
#include <cmath>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <set>

#include "buoytrack/devicesim.hpp"
#include "buoytrack/geofence.hpp"
#include "buoytrack/json_io.hpp"
#include "buoytrack/nmea.hpp"
#include "buoytrack/pdu.hpp"
#include "buoytrack/store.hpp"
#include "support/generators.hpp"
#include "support/line_client.hpp"
#include "support/oracles.hpp"
#include "support/pdu_harness.hpp"
#include "support/process.hpp"
#include "support/sse_reader.hpp"
#include "support/temp_dir.hpp"

using namespace buoytrack;
using json = nlohmann::json;
using Clock = std::chrono::steady_clock;

namespace {

const std::string kCli = BUOYTRACK_CLI;

struct Failed : std::runtime_error {
    using std::runtime_error::runtime_error;
};

void require(bool ok, const std::string& what) {
    if (!ok) throw Failed(what);
}

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

// ---------------------------------------------------------------------------

std::string nmea_codec() {
    const auto t0 = Clock::now();
    std::mt19937_64 rng(1001);
    for (int i = 0; i < 1000; ++i) {
        const auto f = gen::random_fix(rng);
        const auto g = nmea::parse_gprmc(nmea::format_gprmc(f));
        const double dc = std::fabs(g.course_deg - f.course_deg);
        require(std::fabs(g.position->lat - f.position->lat) <= 1e-6 &&
                    std::fabs(g.position->lon - f.position->lon) <= 1e-6 &&
                    std::fabs(g.speed_knots - f.speed_knots) <= 0.1 && std::fmin(dc, 360 - dc) <= 0.1,
                "round trip mismatch on fix " + std::to_string(i));
    }
    std::uniform_int_distribution<int> printable(0x20, 0x7E);
    int rejected = 0;
    for (int i = 0; i < 1000; ++i) {
        const auto sentence = nmea::format_gprmc(gen::random_fix(rng));
        const auto star = sentence.rfind('*');
        std::string body = sentence.substr(1, star - 1);
        std::uniform_int_distribution<std::size_t> pos(0, body.size() - 1);
        const auto at = pos(rng);
        char c;
        do {
            c = static_cast<char>(printable(rng));
        } while (c == body[at] || c == '$' || c == '*');
        body[at] = c;
        const auto mutated = "$" + body + sentence.substr(star);
        require(oracle::xor_fold_hex(body) != sentence.substr(star + 1), "mutation kept the checksum: " + mutated);
        try {
            nmea::parse_gprmc(mutated);
        } catch (const nmea::NmeaError&) {
            ++rejected;
        }
    }
    require(rejected == 1000, std::to_string(1000 - rejected) + " mutated sentences accepted");
    const double secs = seconds_since(t0);
    require(secs < 5.0, "took " + std::to_string(secs) + " s");
    return "1000 round trips, 1000/1000 mutations rejected";
}

std::string coordinate_conversion() {
    std::mt19937_64 rng(1002);
    std::uniform_int_distribution<int> lat_deg(0, 89), lon_deg(0, 179), tenth_milli(0, 599999);
    std::uniform_int_distribution<int> which(0, 3);
    double worst = 0.0;
    for (int i = 0; i < 10000; ++i) {
        const bool is_lat = i % 2 == 0;
        const int deg = is_lat ? lat_deg(rng) : lon_deg(rng);
        const int m = tenth_milli(rng);  // minutes x 10^4
        char field[32];
        std::snprintf(field, sizeof field, is_lat ? "%02d%02d.%04d" : "%03d%02d.%04d", deg, m / 10000, m % 10000);
        const char hemi = is_lat ? "NS"[which(rng) % 2] : "EW"[which(rng) % 2];
        const double got = nmea::coord_to_degrees(field, hemi);
        const double want = oracle::dd_plus_mm(deg, std::stod(std::string(field).substr(is_lat ? 2 : 3)), hemi);
        worst = std::fmax(worst, std::fabs(got - want));
    }
    require(worst <= 1e-9, "max error " + std::to_string(worst));
    char buf[64];
    std::snprintf(buf, sizeof buf, "10000 fields, max |error| %.1e", worst);
    return buf;
}

std::string pdu_codec() {
    for (int len = 0; len <= 4; ++len) {
        const int limit = static_cast<int>(std::pow(10, len));
        for (int v = 0; v < limit; ++v) {
            char buf[8];
            std::snprintf(buf, sizeof buf, "%0*d", len, v % 10000);
            const std::string digits = len ? buf : "";
            require(pdu::decode_semi_octets(pdu::encode_semi_octets(digits), digits.size()) == digits,
                    "semi-octet round trip failed for '" + digits + "'");
        }
    }
    std::mt19937_64 rng(1003);
    std::uniform_int_distribution<int> digit(0, 9), byte(0, 255), dlen(1, 20), plen(0, 140);
    for (int i = 0; i < 10000; ++i) {
        std::string digits;
        for (int k = dlen(rng); k > 0; --k) digits += static_cast<char>('0' + digit(rng));
        require(pdu::decode_semi_octets(pdu::encode_semi_octets(digits), digits.size()) == digits,
                "semi-octet round trip failed for " + digits);
    }
    for (int i = 0; i < 1000; ++i) {
        pdu::SmsSubmit m;
        m.message_ref = static_cast<std::uint8_t>(byte(rng));
        for (int k = dlen(rng); k > 0; --k) m.dest_digits += static_cast<char>('0' + digit(rng));
        m.type_of_address = i % 2 ? pdu::kTypeInternational : pdu::kTypeNational;
        m.payload.resize(static_cast<std::size_t>(plen(rng)));
        for (auto& b : m.payload) b = static_cast<std::uint8_t>(byte(rng));
        const auto back = harness::decode_submit(pdu::encode_submit(m));
        require(back.message_ref == m.message_ref && back.dest_digits == m.dest_digits &&
                    back.type_of_address == m.type_of_address && back.payload == m.payload,
                "SUBMIT round trip failed on message " + std::to_string(i));
    }
    // The worked example, assembled field by field from the SUBMIT layout.
    const std::string from_layout = std::string("00") + "11" + "00" + "0B" + "81" +
                                    oracle::semi_octet_hex("13800138000") + "00" + "04" + "AA" + "03" + "504F53";
    const std::string example = "0011000B813108108300F00004AA03504F53";
    require(from_layout == example, "layout assembly disagrees with the worked example");
    const auto encoded = pdu::encode_submit({0, "13800138000", pdu::kTypeNational, {0x50, 0x4F, 0x53}});
    require(encoded == example, "worked example encodes as " + encoded);
    return "11111 exhaustive + 10000 random semi-octets, 1000 SUBMIT round trips, worked example exact";
}

std::string wire_protocol() {
    testsupport::TempDir dir;
    testsupport::ServeProcess server(kCli, (dir.path() / "data").string());
    const std::string imei = "356938035643809";
    const auto fix = [](int n) {
        nmea::GprmcFix f;
        f.status = nmea::Status::Active;
        f.position = LatLon{54.1 + n * 0.001, 10.2};
        const auto [d, t] = nmea::civil_from_epoch(1700000000 + n);
        f.date = d;
        f.utc_time = t;
        return nmea::format_gprmc(f);
    };

    testsupport::LineClient c(static_cast<std::uint16_t>(server.tcp_port));
    std::vector<std::string> replies;
    replies.push_back(c.request("LOGIN," + imei + ",2.1\r\n"));
    for (int seq = 1; seq <= 3; ++seq) replies.push_back(c.request("POS," + imei + "," + std::to_string(seq) + "," + fix(seq) + "\r\n"));
    replies.push_back(c.request("HB," + imei + "\r\n"));
    require(replies[0].rfind("ACK,LOGIN,", 0) == 0, "login reply " + replies[0]);
    const std::vector<std::string> tail{"ACK,POS,1", "ACK,POS,2", "ACK,POS,3", "ACK,HB"};
    require(std::vector<std::string>(replies.begin() + 1, replies.end()) == tail, "unexpected ACK sequence");

    const auto replayed = c.request("POS," + imei + ",2," + fix(4) + "\r\n");
    require(replayed.rfind("ERR,SEQ,", 0) == 0, "replayed seq got " + replayed);
    auto bad = fix(5);
    bad.back() = bad.back() == '0' ? '1' : '0';
    const auto badpos = c.request("POS," + imei + ",4," + bad + "\r\n");
    require(badpos.rfind("ERR,BADPOS,", 0) == 0, "bad checksum got " + badpos);

    testsupport::LineClient fresh(static_cast<std::uint16_t>(server.tcp_port));
    const auto nologin = fresh.request("POS," + imei + ",9," + fix(9) + "\r\n");
    require(nologin.rfind("ERR,NOLOGIN,", 0) == 0, "POS before LOGIN got " + nologin);
    server.stop();
    return "LOGIN/3xPOS/HB -> exact ACKs; NOLOGIN, SEQ, BADPOS rejected";
}

std::string geofence_check() {
    // Oracle agreement.
    std::mt19937_64 rng(1005);
    std::uniform_real_distribution<double> lat(-80, 80), lon(-170, 170), size(1e-4, 0.5), off(-1.1, 1.1);
    std::uniform_int_distribution<int> verts(3, 14);
    int compared = 0;
    while (compared < 10000) {
        const oracle::P center{lat(rng), lon(rng)};
        const double r = size(rng);
        const auto poly = compared % 2 ? oracle::star_polygon(rng, center, 0.2 * r, r, verts(rng))
                                       : oracle::convex_polygon(rng, center, r, verts(rng));
        std::vector<LatLon> ring;
        for (const auto& p : poly) ring.push_back({p.x, p.y});
        if (!geofence::is_valid_polygon(ring)) continue;
        const oracle::P p{center.x + off(rng) * r, center.y + off(rng) * r};
        if (oracle::dist_to_boundary(p, poly) < 1e-7) continue;
        const bool inside = oracle::winding_number(p, poly) != 0;
        const auto got = geofence::point_in_polygon({p.x, p.y}, ring);
        require(got == (inside ? geofence::Containment::Inside : geofence::Containment::Outside),
                "disagreement with winding number on case " + std::to_string(compared));
        ++compared;
    }

    // Concave example: the oracle must agree before the classifier is asked.
    const std::vector<oracle::P> concave{{0, 0}, {4, 0}, {4, 4}, {2, 1}, {0, 4}};
    const oracle::P q{2, 3};
    int crossings = 0;
    for (std::size_t i = 0; i < concave.size(); ++i) {
        const auto a = concave[i], b = concave[(i + 1) % concave.size()];
        if ((a.y > q.y) != (b.y > q.y) && a.x + (q.y - a.y) * (b.x - a.x) / (b.y - a.y) > q.x) ++crossings;
    }
    require(oracle::winding_number(q, concave) == 0 && crossings == 2, "oracle does not confirm the concave example");
    require(geofence::point_in_polygon({2, 3}, std::vector<LatLon>{{0, 0}, {4, 0}, {4, 4}, {2, 1}, {0, 4}}) ==
                geofence::Containment::Outside,
            "concave example misclassified");

    // Scripted route leaving the fence twice, through the real server.
    testsupport::TempDir dir;
    testsupport::ServeProcess server(kCli, (dir.path() / "data").string());
    httplib::Client http("127.0.0.1", server.http_port);
    const geofence::Geofence fence{0, "box", {{54.000, 10.000}, {54.010, 10.000}, {54.010, 10.010}, {54.000, 10.010}}, true};
    auto res = http.Post("/api/fences", json_io::to_geojson(fence).dump(), "application/json");
    require(res && res->status == 201, "fence POST failed");
    const auto route_file = dir.path() / "route.json";
    std::ofstream(route_file) << json{{"waypoints", {{54.005, 10.005}, {54.005, 10.015}, {54.005, 10.005}, {54.015, 10.005}}},
                                      {"speed_knots", 20},
                                      {"report_interval_s", 5}}
                                     .dump();
    const auto sim = testsupport::run({kCli, "sim", "--server", "127.0.0.1:" + std::to_string(server.tcp_port), "--imei",
                                       "356938035643810", "--route", route_file.string(), "--count", "60", "--interval",
                                       "0", "--start", "1700000000"});
    require(sim.exit_code == 0, "sim failed: " + sim.err);
    res = http.Get("/api/alarms");
    require(res && res->status == 200, "alarm query failed");
    const auto alarms = json::parse(res->body);
    server.stop();
    require(alarms.size() == 2, std::to_string(alarms.size()) + " alarms persisted, expected 2");
    return "10000/10000 oracle agreement; concave (2,3) confirmed wn=0, crossings=2 -> Outside; 2 exits -> 2 alarms";
}

std::string playback_window() {
    testsupport::TempDir dir;
    {
        store::Store s(dir.path() / "direct", {.fsync = false});
        const auto imei = wire::Imei::from("356938035643811");
        s.register_terminal(imei);
        (void)s.query_track(imei.str(), 0, 604800);
        try {
            (void)s.query_track(imei.str(), 0, 604801);
            throw Failed("store accepted 604801 s");
        } catch (const store::StoreError& e) {
            require(e.code() == store::Errc::WindowTooLarge, std::string("store raised ") + e.what());
        }
    }
    testsupport::ServeProcess server(kCli, (dir.path() / "data").string());
    testsupport::LineClient c(static_cast<std::uint16_t>(server.tcp_port));
    require(c.request("LOGIN,356938035643812,1\r\n").rfind("ACK,LOGIN", 0) == 0, "login failed");
    httplib::Client http("127.0.0.1", server.http_port);
    auto ok = http.Get("/api/terminals/356938035643812/track?from=1000&to=605800");
    require(ok && ok->status == 200, "HTTP rejected 604800 s");
    auto too_big = http.Get("/api/terminals/356938035643812/track?from=1000&to=605801");
    require(too_big && too_big->status == 400 && json::parse(too_big->body)["code"] == "WINDOW_TOO_LARGE",
            "HTTP did not answer 400 WINDOW_TOO_LARGE for 604801 s");
    server.stop();
    return "604800 s accepted, 604801 s -> WindowTooLarge (store) and 400 WINDOW_TOO_LARGE (HTTP)";
}

std::string device_state_machine() {
    using devicesim::DeviceEvent;
    using devicesim::Phase;
    devicesim::DeviceState s;
    for (auto e : {DeviceEvent::PowerOn, DeviceEvent::Registered, DeviceEvent::GprsUp, DeviceEvent::FixAcquired}) {
        s = devicesim::device_step(s, e, 0);
    }
    require(s.phase == Phase::Reporting && s.indicator_lit && s.gps_on && s.gprs_on, "start sequence did not reach Reporting");
    for (std::int64_t t = 1; t < 600; ++t) s = devicesim::device_step(s, DeviceEvent::Tick, t);
    require(s.phase == Phase::Reporting, "entered power save before 600 s");
    s = devicesim::device_step(s, DeviceEvent::Tick, 600);
    require(s.phase == Phase::PowerSave && !s.gps_on && !s.gprs_on, "600 s idle did not power down both radios");
    s = devicesim::device_step(s, DeviceEvent::DataRequest, 610);
    for (auto e : {DeviceEvent::Registered, DeviceEvent::GprsUp, DeviceEvent::FixAcquired}) {
        s = devicesim::device_step(s, e, 615);
    }
    require(s.phase == Phase::Reporting && s.gps_on && s.gprs_on && s.indicator_lit, "data request did not restore reporting");
    return "Reporting with indicator lit; PowerSave at 600 s idle with radios off; DataRequest restores Reporting";
}

std::string end_to_end() {
    const auto t0 = Clock::now();
    testsupport::TempDir dir;
    const auto data = (dir.path() / "data").string();
    const std::string imei = "356938035643813";
    const std::string query = "/api/terminals/" + imei + "/track?from=1700000000&to=1700604800";
    std::string first_body;
    {
        testsupport::ServeProcess server(kCli, data);
        const auto sim = testsupport::run({kCli, "sim", "--server", "127.0.0.1:" + std::to_string(server.tcp_port),
                                           "--imei", imei, "--count", "500", "--interval", "0.1", "--start",
                                           "1700000000"});
        require(sim.exit_code == 0, "sim failed: " + sim.out + sim.err);
        httplib::Client http("127.0.0.1", server.http_port);
        auto res = http.Get(query);
        require(res && res->status == 200, "track query failed");
        const auto points = json::parse(res->body)["points"];
        require(points.size() == 500, std::to_string(points.size()) + " points stored, expected 500");
        for (std::size_t i = 0; i < points.size(); ++i) {
            require(points[i]["seq"] == i + 1, "point " + std::to_string(i) + " out of seq order");
        }
        first_body = res->body;
        require(server.stop().exit_code == 0, "server did not shut down cleanly");
    }
    testsupport::ServeProcess restarted(kCli, data);
    httplib::Client http("127.0.0.1", restarted.http_port);
    auto res = http.Get(query);
    require(res && res->status == 200, "track query after restart failed");
    require(json::parse(res->body)["points"] == json::parse(first_body)["points"], "points differ after restart");
    restarted.stop();
    const double secs = seconds_since(t0);
    require(secs < 600, "took " + std::to_string(secs) + " s");
    char buf[128];
    std::snprintf(buf, sizeof buf, "500 points in seq order, identical after restart, %.0f s", secs);
    return buf;
}

std::string live_feed_ordering() {
    testsupport::TempDir dir;
    testsupport::ServeProcess server(kCli, (dir.path() / "data").string());
    testsupport::SseReader live("127.0.0.1", server.http_port);
    require(live.wait_connected(), "subscriber did not connect");

    const std::vector<std::string> imeis{"356938035643814", "356938035643815", "356938035643816"};
    std::vector<std::unique_ptr<testsupport::Child>> sims;
    for (std::size_t i = 0; i < imeis.size(); ++i) {
        sims.push_back(std::make_unique<testsupport::Child>(std::vector<std::string>{
            kCli, "sim", "--server", "127.0.0.1:" + std::to_string(server.tcp_port), "--imei", imeis[i], "--count",
            "150", "--interval", "0.01", "--start", std::to_string(1700000000 + 100000 * i)}));
    }
    for (auto& s : sims) require(s->wait().exit_code == 0, "a simulator failed");
    require(live.wait_for([&] { return live.count("position") == 450; }), "subscriber saw fewer than 450 positions");

    httplib::Client http("127.0.0.1", server.http_port);
    std::map<std::string, std::set<std::uint64_t>> stored;
    for (const auto& imei : imeis) {
        auto res = http.Get("/api/terminals/" + imei + "/track?from=1700000000&to=1700604800");
        require(res && res->status == 200, "track query failed");
        const auto body = json::parse(res->body);
        for (const auto& p : body["points"]) stored[imei].insert(p["id"].get<std::uint64_t>());
    }
    std::map<std::string, std::uint64_t> last_seq;
    for (const auto& e : live.events("position")) {
        const auto imei = e.data["terminal"].get<std::string>();
        const auto& point = e.data["point"];
        require(stored[imei].contains(point["id"].get<std::uint64_t>()),
                "pushed point " + point["id"].dump() + " not returned by a track query");
        const auto seq = point["seq"].get<std::uint64_t>();
        require(seq == last_seq[imei] + 1, "terminal " + imei + " events out of seq order at " + std::to_string(seq));
        last_seq[imei] = seq;
    }
    server.stop();
    return "450 pushed positions from 3 terminals, all queryable, per-terminal seq order";
}

}  // namespace

int main() {
    const std::vector<std::pair<std::string, std::function<std::string()>>> criteria{
        {"NMEA codec", nmea_codec},
        {"Coordinate conversion", coordinate_conversion},
        {"PDU codec", pdu_codec},
        {"Wire protocol", wire_protocol},
        {"Geofence", geofence_check},
        {"Playback window rule", playback_window},
        {"Device state machine", device_state_machine},
        {"End-to-end", end_to_end},
        {"Live-feed ordering", live_feed_ordering},
    };
    int failures = 0;
    for (const auto& [name, check] : criteria) {
        const auto t0 = Clock::now();
        std::string detail;
        bool ok = false;
        try {
            detail = check();
            ok = true;
        } catch (const std::exception& e) {
            detail = e.what();
        }
        failures += !ok;
        char secs[32];
        std::snprintf(secs, sizeof secs, "%.2fs", seconds_since(t0));
        std::cout << (ok ? "PASS" : "FAIL") << "  " << name << ": " << detail << " [" << secs << "]" << std::endl;
    }
    return failures == 0 ? 0 : 1;
}
