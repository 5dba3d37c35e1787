#pragma once

// NMEA 0183 $GPRMC / $GNRMC codec.

#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <optional>
#include <string>
#include <string_view>

#include "buoytrack/detail/text.hpp"
#include "buoytrack/error.hpp"
#include "buoytrack/geo.hpp"

namespace buoytrack::nmea {

enum class Errc {
    IllegalCharacter,
    MalformedCoordinate,
    NotRmc,
    ChecksumMismatch,
    MalformedField,
};

inline std::string_view to_string(Errc e) {
    switch (e) {
        case Errc::IllegalCharacter: return "IllegalCharacter";
        case Errc::MalformedCoordinate: return "MalformedCoordinate";
        case Errc::NotRmc: return "NotRmc";
        case Errc::ChecksumMismatch: return "ChecksumMismatch";
        case Errc::MalformedField: return "MalformedField";
    }
    return "Unknown";
}

using NmeaError = Error<Errc>;

enum class Status { Active, Void };

struct UtcTime {
    int hour = 0;
    int minute = 0;
    int second = 0;
    int millisecond = 0;  // dropped by format_gprmc

    friend bool operator==(const UtcTime&, const UtcTime&) = default;
};

/// Calendar date with a four-digit year (two-digit years map to 2000-2099).
struct Date {
    int day = 1;
    int month = 1;
    int year = 2000;

    friend bool operator==(const Date&, const Date&) = default;
};

struct GprmcFix {
    std::string talker = "GP";  // "GP" or "GN"
    std::optional<UtcTime> utc_time;
    Status status = Status::Void;
    std::optional<LatLon> position;  // absent only in void sentences
    double speed_knots = 0.0;
    double course_deg = 0.0;
    std::optional<Date> date;
    std::optional<double> mag_variation_deg;  // east positive
    bool checksum_ok = false;
};

inline bool valid_date(const Date& d) {
    using namespace std::chrono;
    if (d.year < 2000 || d.year > 2099) return false;
    return year_month_day{year{d.year}, month{static_cast<unsigned>(d.month)},
                          day{static_cast<unsigned>(d.day)}}
        .ok();
}

/// Seconds since the Unix epoch for the fix's date and time, if both present.
inline std::optional<std::int64_t> epoch_seconds(const GprmcFix& fix) {
    if (!fix.date || !fix.utc_time) return std::nullopt;
    using namespace std::chrono;
    const sys_days days{year_month_day{year{fix.date->year},
                                       month{static_cast<unsigned>(fix.date->month)},
                                       day{static_cast<unsigned>(fix.date->day)}}};
    return static_cast<std::int64_t>(days.time_since_epoch().count()) * 86400 +
           fix.utc_time->hour * 3600 + fix.utc_time->minute * 60 + fix.utc_time->second;
}

/// Inverse of epoch_seconds: UTC date and time for a Unix timestamp.
inline std::pair<Date, UtcTime> civil_from_epoch(std::int64_t epoch) {
    using namespace std::chrono;
    std::int64_t days = epoch / 86400;
    std::int64_t rem = epoch % 86400;
    if (rem < 0) {
        rem += 86400;
        --days;
    }
    const year_month_day ymd{sys_days{std::chrono::days{days}}};
    Date d{static_cast<int>(static_cast<unsigned>(ymd.day())),
           static_cast<int>(static_cast<unsigned>(ymd.month())), static_cast<int>(ymd.year())};
    UtcTime t{static_cast<int>(rem / 3600), static_cast<int>(rem / 60 % 60),
              static_cast<int>(rem % 60), 0};
    return {d, t};
}

/// XOR of every character of the text between '$' and '*', as two uppercase
/// hex digits.
inline std::string nmea_checksum(std::string_view body) {
    std::uint8_t sum = 0;
    for (char c : body) {
        if (c == '$' || c == '*') {
            throw NmeaError(Errc::IllegalCharacter, std::string("'") + c + "' in sentence body");
        }
        sum ^= static_cast<std::uint8_t>(c);
    }
    std::string out;
    detail::append_hex_byte(out, sum);
    return out;
}

/// Converts an NMEA "ddmm.mmmm" (N/S) or "dddmm.mmmm" (E/W) field to signed
/// decimal degrees.
inline double coord_to_degrees(std::string_view field, char hemisphere) {
    const bool is_lat = hemisphere == 'N' || hemisphere == 'S';
    const bool is_lon = hemisphere == 'E' || hemisphere == 'W';
    if (!is_lat && !is_lon) {
        throw NmeaError(Errc::MalformedCoordinate, "bad hemisphere");
    }
    const auto dot = field.find('.');
    const auto int_part = field.substr(0, dot);
    if (int_part.size() < 3 || int_part.size() > 5 || !detail::all_digits(int_part)) {
        throw NmeaError(Errc::MalformedCoordinate, std::string(field));
    }
    const auto deg_text = int_part.substr(0, int_part.size() - 2);
    const auto min_text = field.substr(int_part.size() - 2);
    const auto degrees = detail::parse_uint<int>(deg_text);
    const auto minutes = detail::parse_unsigned_decimal(min_text);
    if (!degrees || !minutes || *minutes >= 60.0) {
        throw NmeaError(Errc::MalformedCoordinate, std::string(field));
    }
    const double limit = is_lat ? 90.0 : 180.0;
    const double value = *degrees + *minutes / 60.0;
    if (*degrees > limit || value > limit) {
        throw NmeaError(Errc::MalformedCoordinate, std::string(field) + " out of range");
    }
    return (hemisphere == 'S' || hemisphere == 'W') ? -value : value;
}

namespace detail {

[[noreturn]] inline void malformed(std::string_view what) {
    throw NmeaError(Errc::MalformedField, std::string(what));
}

inline std::optional<UtcTime> parse_time(std::string_view f) {
    if (f.empty()) return std::nullopt;
    if (f.size() < 6) malformed("utc time");
    const auto hms = f.substr(0, 6);
    if (!buoytrack::detail::all_digits(hms)) malformed("utc time");
    UtcTime t;
    t.hour = (hms[0] - '0') * 10 + (hms[1] - '0');
    t.minute = (hms[2] - '0') * 10 + (hms[3] - '0');
    t.second = (hms[4] - '0') * 10 + (hms[5] - '0');
    if (f.size() > 6) {
        auto frac = f.substr(6);
        if (frac.size() < 2 || frac[0] != '.' || !buoytrack::detail::all_digits(frac.substr(1))) {
            malformed("utc time fraction");
        }
        int ms = 0;
        int scale = 100;
        for (char c : frac.substr(1)) {
            ms += (c - '0') * scale;
            scale /= 10;
        }
        t.millisecond = ms;
    }
    if (t.hour > 23 || t.minute > 59 || t.second > 59) malformed("utc time out of range");
    return t;
}

inline std::optional<Date> parse_date(std::string_view f) {
    if (f.empty()) return std::nullopt;
    if (f.size() != 6 || !buoytrack::detail::all_digits(f)) malformed("date");
    Date d;
    d.day = (f[0] - '0') * 10 + (f[1] - '0');
    d.month = (f[2] - '0') * 10 + (f[3] - '0');
    d.year = 2000 + (f[4] - '0') * 10 + (f[5] - '0');
    if (!valid_date(d)) malformed("date not a calendar date");
    return d;
}

inline std::optional<double> parse_coord(std::string_view value, std::string_view hemi,
                                         bool latitude) {
    if (value.empty() && hemi.empty()) return std::nullopt;
    if (hemi.size() != 1) malformed("hemisphere");
    const char h = hemi[0];
    if (latitude ? (h != 'N' && h != 'S') : (h != 'E' && h != 'W')) malformed("hemisphere");
    try {
        return coord_to_degrees(value, h);
    } catch (const NmeaError& e) {
        malformed(e.what());
    }
}

inline double parse_nonneg(std::string_view f, std::string_view what) {
    if (f.empty()) return 0.0;
    auto v = buoytrack::detail::parse_unsigned_decimal(f);
    if (!v) malformed(what);
    return *v;
}

}  // namespace detail

struct ParseOptions {
    // When false, a checksum mismatch is reported through checksum_ok instead
    // of throwing.
    bool require_checksum = true;
};

/// Decodes one RMC sentence ("$GPRMC,...*hh"). A trailing CR/LF is tolerated.
inline GprmcFix parse_gprmc(std::string_view line, ParseOptions opts = {}) {
    while (!line.empty() && (line.back() == '\n' || line.back() == '\r')) line.remove_suffix(1);
    if (line.empty() || line[0] != '$') detail::malformed("missing '$'");
    const auto star = line.rfind('*');
    if (star == std::string_view::npos) detail::malformed("missing '*'");
    const auto body = line.substr(1, star - 1);
    const auto stated = line.substr(star + 1);

    const auto id_end = body.find(',');
    const auto id = body.substr(0, id_end);
    if (id.size() != 5 || id.substr(2) != "RMC" ||
        (id.substr(0, 2) != "GP" && id.substr(0, 2) != "GN")) {
        throw NmeaError(Errc::NotRmc, std::string(id));
    }
    if (body.find('$') != std::string_view::npos) detail::malformed("'$' inside sentence");

    if (stated.size() != 2 || buoytrack::detail::hex_value(stated[0]) < 0 ||
        buoytrack::detail::hex_value(stated[1]) < 0) {
        detail::malformed("checksum field");
    }
    const auto computed = nmea_checksum(body);
    const int stated_value =
        buoytrack::detail::hex_value(stated[0]) * 16 + buoytrack::detail::hex_value(stated[1]);
    const int computed_value =
        buoytrack::detail::hex_value(computed[0]) * 16 + buoytrack::detail::hex_value(computed[1]);
    const bool checksum_ok = stated_value == computed_value;
    if (!checksum_ok && opts.require_checksum) {
        throw NmeaError(Errc::ChecksumMismatch,
                        "stated " + std::string(stated) + ", computed " + computed);
    }

    // id, time, status, lat, N/S, lon, E/W, speed, course, date, var, E/W
    // [, mode [, nav status]]
    const auto f = buoytrack::detail::split(body, ',');
    if (f.size() < 12 || f.size() > 14) {
        detail::malformed("expected 12-14 fields, got " + std::to_string(f.size()));
    }
    for (std::size_t i = 12; i < f.size(); ++i) {
        if (f[i].size() > 1) detail::malformed("mode indicator");
    }

    GprmcFix fix;
    fix.talker = std::string(id.substr(0, 2));
    fix.checksum_ok = checksum_ok;
    fix.utc_time = detail::parse_time(f[1]);
    if (f[2] == "A") {
        fix.status = Status::Active;
    } else if (f[2] == "V") {
        fix.status = Status::Void;
    } else {
        detail::malformed("status");
    }
    const auto lat = detail::parse_coord(f[3], f[4], true);
    const auto lon = detail::parse_coord(f[5], f[6], false);
    if (lat.has_value() != lon.has_value()) detail::malformed("half a position");
    if (lat) fix.position = LatLon{*lat, *lon};
    if (fix.status == Status::Active && !fix.position) detail::malformed("active fix without position");

    fix.speed_knots = detail::parse_nonneg(f[7], "speed");
    fix.course_deg = detail::parse_nonneg(f[8], "course");
    if (fix.course_deg >= 360.0) detail::malformed("course out of range");
    fix.date = detail::parse_date(f[9]);

    if (!f[10].empty() || !f[11].empty()) {
        if (f[11] != "E" && f[11] != "W") detail::malformed("variation direction");
        const double var = detail::parse_nonneg(f[10], "variation");
        if (f[10].empty() || var > 180.0) detail::malformed("variation");
        fix.mag_variation_deg = f[11] == "W" ? -var : var;
    }
    return fix;
}

namespace detail {

// Emits |deg| as (d)ddmm.mmmm with four decimals of minutes, carrying
// rounded-up minutes into the degree part.
inline void append_coord(std::string& out, double deg, int deg_width) {
    const auto ticks = static_cast<long long>(std::llround(std::fabs(deg) * 600000.0));
    const long long whole = ticks / 600000;
    const long long frac = ticks % 600000;
    char buf[32];
    std::snprintf(buf, sizeof buf, "%0*lld%02lld.%04lld", deg_width, whole, frac / 10000,
                  frac % 10000);
    out += buf;
}

inline void append_tenths(std::string& out, double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%05.1f", v);
    out += buf;
}

}  // namespace detail

/// Builds a complete "$GPRMC,...*hh" sentence (no line terminator).
inline std::string format_gprmc(const GprmcFix& fix) {
    std::string body = fix.talker.empty() ? std::string("GP") : fix.talker;
    body += "RMC,";
    char buf[32];
    if (fix.utc_time) {
        std::snprintf(buf, sizeof buf, "%02d%02d%02d", fix.utc_time->hour, fix.utc_time->minute,
                      fix.utc_time->second);
        body += buf;
    }
    body += fix.status == Status::Active ? ",A," : ",V,";
    if (fix.position) {
        detail::append_coord(body, fix.position->lat, 2);
        body += fix.position->lat < 0 ? ",S," : ",N,";
        detail::append_coord(body, fix.position->lon, 3);
        body += fix.position->lon < 0 ? ",W," : ",E,";
    } else {
        body += ",,,,";
    }
    detail::append_tenths(body, fix.speed_knots);
    body += ',';
    // 359.96 would print as 360.0, which is not a valid course.
    const double course = std::round(fix.course_deg * 10.0) >= 3600.0 ? 0.0 : fix.course_deg;
    detail::append_tenths(body, course);
    body += ',';
    if (fix.date) {
        std::snprintf(buf, sizeof buf, "%02d%02d%02d", fix.date->day, fix.date->month,
                      fix.date->year % 100);
        body += buf;
    }
    body += ',';
    if (fix.mag_variation_deg) {
        detail::append_tenths(body, std::fabs(*fix.mag_variation_deg));
        body += *fix.mag_variation_deg < 0 ? ",W" : ",E";
    } else {
        body += ',';
    }
    return "$" + body + "*" + nmea_checksum(body);
}

}  // namespace buoytrack::nmea
