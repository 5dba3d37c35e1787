#pragma once

// Locator terminal model: power-up / power-save state machine and a
// route-following fix generator.

#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "buoytrack/error.hpp"
#include "buoytrack/geo.hpp"
#include "buoytrack/nmea.hpp"

namespace buoytrack::devicesim {

enum class Errc { IllegalTransition, InvalidRoute };

inline std::string_view to_string(Errc e) {
    switch (e) {
        case Errc::IllegalTransition: return "IllegalTransition";
        case Errc::InvalidRoute: return "InvalidRoute";
    }
    return "Unknown";
}

using DeviceError = Error<Errc>;

enum class Phase { Off, Registering, GprsConnecting, Acquiring, Reporting, PowerSave };

inline std::string_view to_string(Phase p) {
    switch (p) {
        case Phase::Off: return "Off";
        case Phase::Registering: return "Registering";
        case Phase::GprsConnecting: return "GprsConnecting";
        case Phase::Acquiring: return "Acquiring";
        case Phase::Reporting: return "Reporting";
        case Phase::PowerSave: return "PowerSave";
    }
    return "Unknown";
}

enum class DeviceEvent { PowerOn, Registered, GprsUp, FixAcquired, Tick, DataRequest };

inline std::string_view to_string(DeviceEvent e) {
    switch (e) {
        case DeviceEvent::PowerOn: return "PowerOn";
        case DeviceEvent::Registered: return "Registered";
        case DeviceEvent::GprsUp: return "GprsUp";
        case DeviceEvent::FixAcquired: return "FixAcquired";
        case DeviceEvent::Tick: return "Tick";
        case DeviceEvent::DataRequest: return "DataRequest";
    }
    return "Unknown";
}

inline constexpr std::int64_t kDefaultIdleTimeoutSeconds = 600;
inline constexpr std::int64_t kDefaultRegistrationDelaySeconds = 2;
inline constexpr std::int64_t kDefaultGprsAttachDelaySeconds = 3;

struct DeviceState {
    Phase phase = Phase::Off;
    bool gps_on = false;
    bool gprs_on = false;
    bool indicator_lit = false;
    std::optional<std::int64_t> idle_since;

    friend bool operator==(const DeviceState&, const DeviceState&) = default;
};

inline bool invariants_hold(const DeviceState& s) {
    const bool gps_phase = s.phase == Phase::Acquiring || s.phase == Phase::Reporting;
    const bool gprs_phase = gps_phase || s.phase == Phase::GprsConnecting;
    if (s.gps_on && !gps_phase) return false;
    if (s.gprs_on && !gprs_phase) return false;
    if (s.phase == Phase::PowerSave && (s.gps_on || s.gprs_on)) return false;
    return true;
}

/// One state-machine step. Tick is a clock event and leaves every phase but
/// Reporting untouched; any other inapplicable event throws IllegalTransition.
inline DeviceState device_step(const DeviceState& state, DeviceEvent event, std::int64_t now,
                               std::int64_t idle_timeout_s = kDefaultIdleTimeoutSeconds) {
    auto illegal = [&] {
        return DeviceError(Errc::IllegalTransition, std::string(to_string(event)) + " in " +
                                                        std::string(to_string(state.phase)));
    };
    DeviceState next = state;
    switch (event) {
        case DeviceEvent::PowerOn:
            if (state.phase != Phase::Off) throw illegal();
            return DeviceState{Phase::Registering, false, false, false, std::nullopt};
        case DeviceEvent::Registered:
            if (state.phase != Phase::Registering) throw illegal();
            next.phase = Phase::GprsConnecting;
            next.gprs_on = true;
            return next;
        case DeviceEvent::GprsUp:
            if (state.phase != Phase::GprsConnecting) throw illegal();
            next.phase = Phase::Acquiring;
            next.gps_on = true;
            return next;
        case DeviceEvent::FixAcquired:
            if (state.phase != Phase::Acquiring) throw illegal();
            next.phase = Phase::Reporting;
            next.indicator_lit = true;
            next.idle_since = now;
            return next;
        case DeviceEvent::Tick:
            if (state.phase == Phase::Reporting && state.idle_since &&
                now - *state.idle_since >= idle_timeout_s) {
                return DeviceState{Phase::PowerSave, false, false, false, std::nullopt};
            }
            return next;
        case DeviceEvent::DataRequest:
            if (state.phase == Phase::Reporting) {
                next.idle_since = now;
                return next;
            }
            if (state.phase == Phase::PowerSave) {
                return DeviceState{Phase::Registering, false, false, false, std::nullopt};
            }
            throw illegal();
    }
    throw illegal();
}

// Route following ------------------------------------------------------------

inline constexpr double kMetersPerNauticalMile = 1852.0;
inline constexpr double kEarthRadiusMeters = 6371008.8;

struct Route {
    std::vector<LatLon> waypoints;
    double speed_knots = 1.0;
    std::int64_t report_interval_s = 1;
};

inline void validate_route(const Route& r) {
    if (r.waypoints.size() < 2) throw DeviceError(Errc::InvalidRoute, "need at least 2 waypoints");
    if (!(r.speed_knots > 0.0) || !std::isfinite(r.speed_knots)) {
        throw DeviceError(Errc::InvalidRoute, "speed_knots must be positive");
    }
    if (r.report_interval_s <= 0) throw DeviceError(Errc::InvalidRoute, "report_interval_s must be positive");
    for (std::size_t i = 0; i < r.waypoints.size(); ++i) {
        if (!in_range(r.waypoints[i])) throw DeviceError(Errc::InvalidRoute, "waypoint out of range");
        if (i > 0 && r.waypoints[i] == r.waypoints[i - 1]) {
            throw DeviceError(Errc::InvalidRoute, "consecutive waypoints are equal");
        }
    }
}

struct RoutePosition {
    LatLon position;
    double course_deg = 0.0;
};

namespace detail {

// Local east/north offsets in meters for a leg, equirectangular at the
// leg's mean latitude.
struct Leg {
    double east_m;
    double north_m;
    double length_m;
};

inline Leg leg_between(const LatLon& a, const LatLon& b) {
    const double deg = std::numbers::pi / 180.0;
    const double mean_lat = (a.lat + b.lat) / 2.0 * deg;
    const double east = (b.lon - a.lon) * deg * kEarthRadiusMeters * std::cos(mean_lat);
    const double north = (b.lat - a.lat) * deg * kEarthRadiusMeters;
    return {east, north, std::hypot(east, north)};
}

inline double bearing_deg(const Leg& leg) {
    double b = std::atan2(leg.east_m, leg.north_m) * 180.0 / std::numbers::pi;
    if (b < 0.0) b += 360.0;
    if (b >= 360.0) b -= 360.0;
    return b;
}

}  // namespace detail

/// Position and course after `t` seconds along the route at constant speed;
/// clamps to the final waypoint.
inline RoutePosition position_at(const Route& route, double t) {
    validate_route(route);
    if (t < 0.0) t = 0.0;
    const double speed_mps = route.speed_knots * kMetersPerNauticalMile / 3600.0;
    double remaining = speed_mps * t;

    for (std::size_t i = 0; i + 1 < route.waypoints.size(); ++i) {
        const auto& a = route.waypoints[i];
        const auto& b = route.waypoints[i + 1];
        const auto leg = detail::leg_between(a, b);
        if (remaining < leg.length_m) {
            const double f = leg.length_m > 0.0 ? remaining / leg.length_m : 0.0;
            return {LatLon{a.lat + f * (b.lat - a.lat), a.lon + f * (b.lon - a.lon)},
                    detail::bearing_deg(leg)};
        }
        remaining -= leg.length_m;
    }
    const auto n = route.waypoints.size();
    const auto last = detail::leg_between(route.waypoints[n - 2], route.waypoints[n - 1]);
    return {route.waypoints.back(), detail::bearing_deg(last)};
}

/// Total time in seconds to traverse the route.
inline double route_duration_s(const Route& route) {
    validate_route(route);
    double length = 0.0;
    for (std::size_t i = 0; i + 1 < route.waypoints.size(); ++i) {
        length += detail::leg_between(route.waypoints[i], route.waypoints[i + 1]).length_m;
    }
    return length / (route.speed_knots * kMetersPerNauticalMile / 3600.0);
}

inline nmea::GprmcFix emit_fix(const Route& route, double t, std::int64_t wallclock_epoch) {
    const auto where = position_at(route, t);
    const auto [date, time] = nmea::civil_from_epoch(wallclock_epoch);
    nmea::GprmcFix fix;
    fix.status = nmea::Status::Active;
    fix.position = where.position;
    fix.speed_knots = route.speed_knots;
    fix.course_deg = where.course_deg;
    fix.date = date;
    fix.utc_time = time;
    fix.checksum_ok = true;
    return fix;
}

}  // namespace buoytrack::devicesim
