#pragma once

// Polygon fences on planar (lat, lon) coordinates with edge-triggered exit
// alarms.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "buoytrack/error.hpp"
#include "buoytrack/geo.hpp"
#include "buoytrack/wire.hpp"

namespace buoytrack::geofence {

enum class Errc {
    TooFewVertices,
    DuplicateVertex,
    SelfIntersecting,
    SpansAntimeridian,
    CoordinateOutOfRange,
};

inline std::string_view to_string(Errc e) {
    switch (e) {
        case Errc::TooFewVertices: return "TooFewVertices";
        case Errc::DuplicateVertex: return "DuplicateVertex";
        case Errc::SelfIntersecting: return "SelfIntersecting";
        case Errc::SpansAntimeridian: return "SpansAntimeridian";
        case Errc::CoordinateOutOfRange: return "CoordinateOutOfRange";
    }
    return "Unknown";
}

using FenceError = Error<Errc>;

inline constexpr double kBoundaryEpsilon = 1e-9;

using FenceId = std::uint64_t;

struct Geofence {
    FenceId id = 0;
    std::string name;
    std::vector<LatLon> vertices;
    bool armed = true;
};

enum class Containment { Inside, Outside, Boundary };

inline std::string_view to_string(Containment c) {
    switch (c) {
        case Containment::Inside: return "Inside";
        case Containment::Outside: return "Outside";
        case Containment::Boundary: return "Boundary";
    }
    return "Unknown";
}

enum class FenceState { Unknown, Inside, Outside };

enum class AlarmKind { Exit };

struct AlarmEvent {
    std::uint64_t id = 0;  // assigned by the store
    wire::Imei terminal;
    FenceId fence_id = 0;
    LatLon position;
    std::int64_t timestamp = 0;
    AlarmKind kind = AlarmKind::Exit;
};

namespace detail {

struct Vec {
    double x;
    double y;
};

inline Vec sub(const LatLon& a, const LatLon& b) { return {a.lat - b.lat, a.lon - b.lon}; }
inline double cross(Vec a, Vec b) { return a.x * b.y - a.y * b.x; }
inline double dot(Vec a, Vec b) { return a.x * b.x + a.y * b.y; }

inline int orientation(const LatLon& a, const LatLon& b, const LatLon& c) {
    const double v = cross(sub(b, a), sub(c, a));
    return (v > 0.0) - (v < 0.0);
}

inline bool on_segment(const LatLon& a, const LatLon& b, const LatLon& p) {
    return std::min(a.lat, b.lat) <= p.lat && p.lat <= std::max(a.lat, b.lat) &&
           std::min(a.lon, b.lon) <= p.lon && p.lon <= std::max(a.lon, b.lon);
}

// Closed-segment intersection, collinear overlap included.
inline bool segments_intersect(const LatLon& p1, const LatLon& p2, const LatLon& q1, const LatLon& q2) {
    const int o1 = orientation(p1, p2, q1);
    const int o2 = orientation(p1, p2, q2);
    const int o3 = orientation(q1, q2, p1);
    const int o4 = orientation(q1, q2, p2);
    if (o1 != o2 && o3 != o4) return true;
    if (o1 == 0 && on_segment(p1, p2, q1)) return true;
    if (o2 == 0 && on_segment(p1, p2, q2)) return true;
    if (o3 == 0 && on_segment(q1, q2, p1)) return true;
    if (o4 == 0 && on_segment(q1, q2, p2)) return true;
    return false;
}

inline double distance_to_segment(const LatLon& p, const LatLon& a, const LatLon& b) {
    const Vec ab = sub(b, a);
    const Vec ap = sub(p, a);
    const double len2 = dot(ab, ab);
    double t = len2 > 0.0 ? dot(ap, ab) / len2 : 0.0;
    t = std::clamp(t, 0.0, 1.0);
    return std::hypot(ap.x - t * ab.x, ap.y - t * ab.y);
}

}  // namespace detail

/// Throws FenceError unless the ring (implicitly closed, first vertex not
/// repeated) is a simple polygon that stays within one hemisphere of longitude.
inline void validate_polygon(std::span<const LatLon> v) {
    const std::size_t n = v.size();
    if (n < 3) throw FenceError(Errc::TooFewVertices, std::to_string(n) + " vertices");
    for (const auto& p : v) {
        if (!in_range(p)) throw FenceError(Errc::CoordinateOutOfRange);
    }
    for (std::size_t i = 0; i < n; ++i) {
        if (v[i] == v[(i + 1) % n]) {
            throw FenceError(Errc::DuplicateVertex, "vertex " + std::to_string(i));
        }
    }
    const auto [lo, hi] = std::minmax_element(v.begin(), v.end(),
                                              [](const LatLon& a, const LatLon& b) { return a.lon < b.lon; });
    if (hi->lon - lo->lon >= 180.0) throw FenceError(Errc::SpansAntimeridian);

    for (std::size_t i = 0; i < n; ++i) {
        const LatLon& a1 = v[i];
        const LatLon& a2 = v[(i + 1) % n];
        for (std::size_t j = i + 1; j < n; ++j) {
            const LatLon& b1 = v[j];
            const LatLon& b2 = v[(j + 1) % n];
            const bool adjacent = j == i + 1 || (i == 0 && j == n - 1);
            if (!adjacent) {
                if (detail::segments_intersect(a1, a2, b1, b2)) {
                    throw FenceError(Errc::SelfIntersecting,
                                     "edges " + std::to_string(i) + " and " + std::to_string(j));
                }
                continue;
            }
            // Adjacent edges share one vertex; they may only touch there.
            // Anti-parallel collinear edges fold back over each other.
            const LatLon& shared = (j == i + 1) ? a2 : a1;
            const LatLon& other_a = (j == i + 1) ? a1 : a2;
            const LatLon& other_b = (j == i + 1) ? b2 : b1;
            if (detail::orientation(other_a, shared, other_b) == 0 &&
                detail::dot(detail::sub(other_a, shared), detail::sub(other_b, shared)) > 0.0) {
                throw FenceError(Errc::SelfIntersecting, "edges " + std::to_string(i) + " and " +
                                                             std::to_string(j) + " overlap");
            }
        }
    }
}

inline bool is_valid_polygon(std::span<const LatLon> v) {
    try {
        validate_polygon(v);
        return true;
    } catch (const FenceError&) {
        return false;
    }
}

/// Ray-casting parity test with an epsilon band around every edge.
inline Containment point_in_polygon(const LatLon& p, std::span<const LatLon> v,
                                    double epsilon = kBoundaryEpsilon) {
    const std::size_t n = v.size();
    for (std::size_t i = 0; i < n; ++i) {
        if (detail::distance_to_segment(p, v[i], v[(i + 1) % n]) <= epsilon) return Containment::Boundary;
    }
    // Ray toward +lon; half-open rule on lat so a vertex on the ray counts once.
    bool inside = false;
    for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
        const LatLon& a = v[i];
        const LatLon& b = v[j];
        if ((a.lat > p.lat) != (b.lat > p.lat)) {
            const double lon_at = a.lon + (p.lat - a.lat) * (b.lon - a.lon) / (b.lat - a.lat);
            if (p.lon < lon_at) inside = !inside;
        }
    }
    return inside ? Containment::Inside : Containment::Outside;
}

struct TransitionResult {
    FenceState state;
    std::optional<AlarmEvent> alarm;
};

/// Boundary counts as inside. An Exit alarm fires only on Inside -> Outside;
/// an Unknown entry adopts the classification silently.
inline TransitionResult evaluate_transition(FenceState prev, const LatLon& p, const Geofence& fence,
                                            const wire::Imei& terminal, std::int64_t now,
                                            double epsilon = kBoundaryEpsilon) {
    const auto c = point_in_polygon(p, fence.vertices, epsilon);
    const FenceState next = c == Containment::Outside ? FenceState::Outside : FenceState::Inside;
    TransitionResult out{next, std::nullopt};
    if (prev == FenceState::Inside && next == FenceState::Outside) {
        out.alarm = AlarmEvent{0, terminal, fence.id, p, now, AlarmKind::Exit};
    }
    return out;
}

/// Per (terminal, fence) containment memory. Not thread-safe; callers
/// serialize updates per terminal.
class ContainmentTracker {
public:
    /// Evaluates every armed fence and returns the alarms raised, in fence
    /// order.
    std::vector<AlarmEvent> observe(const wire::Imei& terminal, const LatLon& p,
                                    std::span<const Geofence> fences, std::int64_t now,
                                    double epsilon = kBoundaryEpsilon) {
        std::vector<AlarmEvent> alarms;
        for (const auto& fence : fences) {
            if (!fence.armed) continue;
            auto& entry = states_[{terminal, fence.id}];
            auto r = evaluate_transition(entry, p, fence, terminal, now, epsilon);
            entry = r.state;
            if (r.alarm) alarms.push_back(std::move(*r.alarm));
        }
        return alarms;
    }

    [[nodiscard]] FenceState state(const wire::Imei& terminal, FenceId fence) const {
        auto it = states_.find({terminal, fence});
        return it == states_.end() ? FenceState::Unknown : it->second;
    }

    /// Forget every terminal's state for a fence (fence edited or deleted).
    void reset_fence(FenceId fence) {
        std::erase_if(states_, [&](const auto& kv) { return kv.first.second == fence; });
    }

private:
    std::map<std::pair<wire::Imei, FenceId>, FenceState> states_;
};

}  // namespace buoytrack::geofence
