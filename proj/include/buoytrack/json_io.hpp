#pragma once

// JSON shapes shared by the journal, the HTTP API and the CLI.

#include <string>
#include <vector>

#include <json.hpp>

#include "buoytrack/devicesim.hpp"
#include "buoytrack/geofence.hpp"
#include "buoytrack/nmea.hpp"
#include "buoytrack/pdu.hpp"
#include "buoytrack/store.hpp"

namespace buoytrack::json_io {

using json = nlohmann::json;

inline json to_json(const store::TrackPoint& p) {
    return {{"id", p.id},
            {"terminal", p.terminal.str()},
            {"timestamp", p.timestamp},
            {"lat", p.lat},
            {"lon", p.lon},
            {"speed_knots", p.speed_knots},
            {"course_deg", p.course_deg},
            {"seq", p.seq},
            {"received_at", p.received_at}};
}

inline store::TrackPoint point_from_json(const json& j) {
    store::TrackPoint p;
    p.id = j.at("id").get<std::uint64_t>();
    p.terminal = wire::Imei::from(j.at("terminal").get<std::string>());
    p.timestamp = j.at("timestamp").get<std::int64_t>();
    p.lat = j.at("lat").get<double>();
    p.lon = j.at("lon").get<double>();
    p.speed_knots = j.at("speed_knots").get<double>();
    p.course_deg = j.at("course_deg").get<double>();
    p.seq = j.at("seq").get<std::uint64_t>();
    p.received_at = j.value("received_at", std::int64_t{0});
    return p;
}

inline json to_json(const store::Terminal& t) {
    json j{{"imei", t.imei.str()}, {"name", t.name}};
    j["last_seen"] = t.last_seen ? json(*t.last_seen) : json(nullptr);
    return j;
}

inline json to_json(const store::TerminalStatus& s) {
    json j = to_json(s.terminal);
    j["online"] = s.online;
    j["last_point"] = s.last_point ? to_json(*s.last_point) : json(nullptr);
    return j;
}

inline json to_json(const store::MapLabel& l) {
    return {{"id", l.id}, {"lat", l.position.lat}, {"lon", l.position.lon}, {"text", l.text},
            {"created_at", l.created_at}};
}

inline store::MapLabel label_from_json(const json& j) {
    return {j.at("id").get<std::uint64_t>(), LatLon{j.at("lat").get<double>(), j.at("lon").get<double>()},
            j.at("text").get<std::string>(), j.at("created_at").get<std::int64_t>()};
}

inline json to_json(const geofence::AlarmEvent& a) {
    return {{"id", a.id},
            {"terminal", a.terminal.str()},
            {"fence_id", a.fence_id},
            {"lat", a.position.lat},
            {"lon", a.position.lon},
            {"timestamp", a.timestamp},
            {"kind", "exit"}};
}

inline geofence::AlarmEvent alarm_from_json(const json& j) {
    geofence::AlarmEvent a;
    a.id = j.at("id").get<std::uint64_t>();
    a.terminal = wire::Imei::from(j.at("terminal").get<std::string>());
    a.fence_id = j.at("fence_id").get<geofence::FenceId>();
    a.position = {j.at("lat").get<double>(), j.at("lon").get<double>()};
    a.timestamp = j.at("timestamp").get<std::int64_t>();
    a.kind = geofence::AlarmKind::Exit;
    return a;
}

// GeoJSON -------------------------------------------------------------------

/// GeoJSON Feature with a Polygon geometry. Positions are [lon, lat] and the
/// ring is closed, as GeoJSON requires.
inline json to_geojson(const geofence::Geofence& f) {
    json ring = json::array();
    for (const auto& v : f.vertices) ring.push_back({v.lon, v.lat});
    if (!f.vertices.empty()) ring.push_back({f.vertices.front().lon, f.vertices.front().lat});
    return {{"type", "Feature"},
            {"id", f.id},
            {"geometry", {{"type", "Polygon"}, {"coordinates", json::array({ring})}}},
            {"properties", {{"name", f.name}, {"armed", f.armed}}}};
}

/// Reads the exterior ring of a Polygon (bare geometry or Feature). A
/// closing vertex equal to the first is dropped. Throws json::exception or
/// std::invalid_argument on shape errors; polygon validity is not checked.
inline std::vector<LatLon> ring_from_geojson(const json& j) {
    const json* geometry = &j;
    if (j.value("type", "") == "Feature") geometry = &j.at("geometry");
    if (geometry->value("type", "") != "Polygon") {
        throw std::invalid_argument("geometry type must be Polygon");
    }
    const auto& rings = geometry->at("coordinates");
    if (!rings.is_array() || rings.empty()) throw std::invalid_argument("polygon has no rings");
    if (rings.size() > 1) throw std::invalid_argument("polygon holes are not supported");
    std::vector<LatLon> out;
    for (const auto& pos : rings.at(0)) {
        if (!pos.is_array() || pos.size() < 2 || !pos[0].is_number() || !pos[1].is_number()) {
            throw std::invalid_argument("position must be [lon, lat]");
        }
        out.push_back({pos[1].get<double>(), pos[0].get<double>()});
    }
    if (out.size() > 1 && out.front() == out.back()) out.pop_back();
    return out;
}

/// Fence from a Feature; name/armed read from properties, falling back to
/// top-level members.
inline geofence::Geofence fence_from_geojson(const json& j) {
    geofence::Geofence f;
    f.vertices = ring_from_geojson(j);
    const json props = j.contains("properties") && j["properties"].is_object() ? j["properties"] : json::object();
    f.name = props.contains("name") ? props["name"].get<std::string>() : j.value("name", std::string{});
    f.armed = props.contains("armed") ? props["armed"].get<bool>() : j.value("armed", true);
    if (j.contains("id") && j["id"].is_number_unsigned()) f.id = j["id"].get<geofence::FenceId>();
    return f;
}

// Fixes and routes -----------------------------------------------------------

inline json to_json(const nmea::GprmcFix& fix) {
    json j{{"talker", fix.talker},
           {"status", fix.status == nmea::Status::Active ? "A" : "V"},
           {"speed_knots", fix.speed_knots},
           {"course_deg", fix.course_deg},
           {"checksum_ok", fix.checksum_ok}};
    j["lat"] = fix.position ? json(fix.position->lat) : json(nullptr);
    j["lon"] = fix.position ? json(fix.position->lon) : json(nullptr);
    if (fix.utc_time) {
        char buf[16];
        std::snprintf(buf, sizeof buf, "%02d:%02d:%02d.%03d", fix.utc_time->hour, fix.utc_time->minute,
                      fix.utc_time->second, fix.utc_time->millisecond);
        j["utc_time"] = buf;
    } else {
        j["utc_time"] = nullptr;
    }
    if (fix.date) {
        char buf[16];
        std::snprintf(buf, sizeof buf, "%04d-%02d-%02d", fix.date->year, fix.date->month, fix.date->day);
        j["date"] = buf;
    } else {
        j["date"] = nullptr;
    }
    j["mag_variation_deg"] = fix.mag_variation_deg ? json(*fix.mag_variation_deg) : json(nullptr);
    return j;
}

inline json to_json(const pdu::SmsDeliver& m) {
    char ts[40];
    const auto& t = m.timestamp;
    std::snprintf(ts, sizeof ts, "%04d-%02d-%02dT%02d:%02d:%02d", t.year, t.month, t.day, t.hour, t.minute,
                  t.second);
    return {{"originator", m.originator_digits},
            {"type_of_address", m.type_of_address},
            {"pid", m.protocol_id},
            {"dcs", m.dcs},
            {"timestamp", ts},
            {"tz_quarter_hours", t.tz_quarter_hours},
            {"payload_hex", pdu::to_hex(m.payload)}};
}

/// Route document: {"waypoints": [[lat, lon], ...], "speed_knots": x,
/// "report_interval_s": n}.
inline devicesim::Route route_from_json(const json& j) {
    devicesim::Route r;
    for (const auto& wp : j.at("waypoints")) {
        if (wp.is_array() && wp.size() == 2) {
            r.waypoints.push_back({wp[0].get<double>(), wp[1].get<double>()});
        } else {
            r.waypoints.push_back({wp.at("lat").get<double>(), wp.at("lon").get<double>()});
        }
    }
    r.speed_knots = j.at("speed_knots").get<double>();
    r.report_interval_s = j.value("report_interval_s", std::int64_t{1});
    devicesim::validate_route(r);
    return r;
}

}  // namespace buoytrack::json_io
