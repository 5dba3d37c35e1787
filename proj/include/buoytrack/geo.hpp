#pragma once

#include <cmath>

namespace buoytrack {

/// WGS-84 position in decimal degrees, north and east positive.
struct LatLon {
    double lat = 0.0;
    double lon = 0.0;

    friend bool operator==(const LatLon&, const LatLon&) = default;
};

inline bool in_range(const LatLon& p) noexcept {
    return std::isfinite(p.lat) && std::isfinite(p.lon) && p.lat >= -90.0 && p.lat <= 90.0 &&
           p.lon >= -180.0 && p.lon <= 180.0;
}

}  // namespace buoytrack
