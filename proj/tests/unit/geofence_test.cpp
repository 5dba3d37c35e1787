#include "buoytrack/geofence.hpp"

#include <gtest/gtest.h>

#include <random>

#include "support/oracles.hpp"

using namespace buoytrack;
using namespace buoytrack::geofence;

namespace {

const std::vector<LatLon> kUnitSquare{{0, 0}, {1, 0}, {1, 1}, {0, 1}};
const std::vector<LatLon> kConcave{{0, 0}, {4, 0}, {4, 4}, {2, 1}, {0, 4}};
const auto kTerminal = wire::Imei::from("123456789012345");

std::optional<Errc> validation_error(const std::vector<LatLon>& v) {
    try {
        validate_polygon(v);
    } catch (const FenceError& e) {
        return e.code();
    }
    return std::nullopt;
}

std::vector<oracle::P> to_oracle(const std::vector<LatLon>& v) {
    std::vector<oracle::P> out;
    for (const auto& p : v) out.push_back({p.lat, p.lon});
    return out;
}

// Crossings of the ray from p toward +x (first coordinate) with the edges.
int crossings_toward_plus_x(oracle::P p, const std::vector<oracle::P>& v) {
    int n = 0;
    for (std::size_t i = 0; i < v.size(); ++i) {
        const auto a = v[i];
        const auto b = v[(i + 1) % v.size()];
        if ((a.y > p.y) == (b.y > p.y)) continue;
        const double x = a.x + (p.y - a.y) * (b.x - a.x) / (b.y - a.y);
        if (x > p.x) ++n;
    }
    return n;
}

Geofence square_fence(FenceId id, bool armed = true) {
    return Geofence{id, "square", kUnitSquare, armed};
}

}  // namespace

TEST(ValidatePolygon, Examples) {
    EXPECT_EQ(validation_error(kUnitSquare), std::nullopt);
    EXPECT_EQ(validation_error(kConcave), std::nullopt);
    EXPECT_EQ(validation_error({{0, 0}, {1, 1}}), Errc::TooFewVertices);
    EXPECT_EQ(validation_error({{0, 0}, {1, 1}, {1, 0}, {0, 1}}), Errc::SelfIntersecting);
}

TEST(ValidatePolygon, MoreRejections) {
    EXPECT_EQ(validation_error({{0, 0}, {1, 0}, {1, 0}, {0, 1}}), Errc::DuplicateVertex);
    EXPECT_EQ(validation_error({{0, 0}, {1, 0}, {0, 1}, {0, 0}}), Errc::DuplicateVertex);
    EXPECT_EQ(validation_error({{0, -100}, {1, 100}, {1, -100}}), Errc::SpansAntimeridian);
    EXPECT_EQ(validation_error({{0, 0}, {91, 0}, {0, 1}}), Errc::CoordinateOutOfRange);
    // Spike doubling back along its own edge.
    EXPECT_EQ(validation_error({{0, 0}, {2, 0}, {1, 0}, {1, 1}}), Errc::SelfIntersecting);
    // Non-adjacent edges touching at a vertex.
    EXPECT_EQ(validation_error({{0, 0}, {2, 0}, {1, 1}, {2, 2}, {0, 2}, {1, 1}}), Errc::SelfIntersecting);
}

TEST(PointInPolygon, UnitSquare) {
    EXPECT_EQ(point_in_polygon({0.5, 0.5}, kUnitSquare), Containment::Inside);
    EXPECT_EQ(point_in_polygon({2, 2}, kUnitSquare), Containment::Outside);
    EXPECT_EQ(point_in_polygon({0, 0.5}, kUnitSquare), Containment::Boundary);
    EXPECT_EQ(point_in_polygon({1, 1}, kUnitSquare), Containment::Boundary);
    EXPECT_EQ(point_in_polygon({0.5, 1 + 5e-10}, kUnitSquare), Containment::Boundary);
    EXPECT_EQ(point_in_polygon({0.5, 1 + 1e-8}, kUnitSquare), Containment::Outside);
}

// The concave example is only asserted after the oracle agrees on it.
TEST(PointInPolygon, ConcaveNotchConfirmedByOracle) {
    const oracle::P p{2, 3};
    const auto poly = to_oracle(kConcave);
    ASSERT_EQ(oracle::winding_number(p, poly), 0);
    ASSERT_EQ(crossings_toward_plus_x(p, poly), 2);
    EXPECT_EQ(point_in_polygon({2, 3}, kConcave), Containment::Outside);
    EXPECT_EQ(point_in_polygon({2, 0.5}, kConcave), Containment::Inside);
    EXPECT_EQ(point_in_polygon({3.5, 3}, kConcave), Containment::Inside);
}

TEST(PointInPolygon, AgreesWithWindingNumberOracle) {
    std::mt19937_64 rng(2024);
    std::uniform_real_distribution<double> lat(-80, 80), lon(-170, 170), size(1e-4, 0.5), offset(-1.1, 1.1);
    std::uniform_int_distribution<int> verts(3, 14);
    int compared = 0, inside = 0;
    while (compared < 10000) {
        const oracle::P c{lat(rng), lon(rng)};
        const double r = size(rng);
        const auto opoly = compared % 2 ? oracle::star_polygon(rng, c, r * 0.2, r, verts(rng))
                                        : oracle::convex_polygon(rng, c, r, verts(rng));
        std::vector<LatLon> poly;
        for (const auto& p : opoly) poly.push_back({p.x, p.y});
        if (!is_valid_polygon(poly)) continue;
        for (int k = 0; k < 5; ++k) {
            const oracle::P p{c.x + offset(rng) * r, c.y + offset(rng) * r};
            if (oracle::dist_to_boundary(p, opoly) < 1e-7) continue;
            const bool expect_inside = oracle::winding_number(p, opoly) != 0;
            const auto got = point_in_polygon({p.x, p.y}, poly);
            ASSERT_EQ(got, expect_inside ? Containment::Inside : Containment::Outside)
                << "case " << compared << " p=(" << p.x << "," << p.y << ")";
            inside += expect_inside;
            ++compared;
        }
    }
    // Both outcomes must be well represented for the comparison to mean much.
    EXPECT_GT(inside, 2000);
    EXPECT_LT(inside, 8000);
}

TEST(PointInPolygon, TranslationInvariant) {
    std::mt19937_64 rng(77);
    std::uniform_real_distribution<double> shift(-40, 40), unit(-0.5, 1.5);
    const std::vector<oracle::P> base = to_oracle(kConcave);
    for (int i = 0; i < 5000; ++i) {
        const oracle::P p{unit(rng) * 4, unit(rng) * 4};
        if (oracle::dist_to_boundary(p, base) < 1e-7) continue;
        const double dlat = shift(rng), dlon = shift(rng);
        std::vector<LatLon> moved;
        for (const auto& v : kConcave) moved.push_back({v.lat + dlat, v.lon + dlon});
        ASSERT_EQ(point_in_polygon({p.x + dlat, p.y + dlon}, moved), point_in_polygon({p.x, p.y}, kConcave));
    }
}

TEST(EvaluateTransition, Examples) {
    const auto fence = square_fence(1);
    auto r = evaluate_transition(FenceState::Unknown, {2, 2}, fence, kTerminal, 10);
    EXPECT_EQ(r.state, FenceState::Outside);
    EXPECT_FALSE(r.alarm);

    r = evaluate_transition(FenceState::Inside, {2, 2}, fence, kTerminal, 11);
    EXPECT_EQ(r.state, FenceState::Outside);
    ASSERT_TRUE(r.alarm);
    EXPECT_EQ(r.alarm->terminal, kTerminal);
    EXPECT_EQ(r.alarm->fence_id, 1u);
    EXPECT_EQ(r.alarm->position, (LatLon{2, 2}));
    EXPECT_EQ(r.alarm->timestamp, 11);
    EXPECT_EQ(r.alarm->kind, AlarmKind::Exit);

    r = evaluate_transition(FenceState::Outside, {2, 2}, fence, kTerminal, 12);
    EXPECT_FALSE(r.alarm);
}

TEST(EvaluateTransition, BoundaryCountsAsInside) {
    const auto fence = square_fence(1);
    auto r = evaluate_transition(FenceState::Inside, {0, 0.5}, fence, kTerminal, 1);
    EXPECT_EQ(r.state, FenceState::Inside);
    EXPECT_FALSE(r.alarm);
    r = evaluate_transition(FenceState::Unknown, {1, 1}, fence, kTerminal, 1);
    EXPECT_EQ(r.state, FenceState::Inside);
}

TEST(ContainmentTracker, KExitsGiveKAlarms) {
    for (int k = 0; k <= 6; ++k) {
        ContainmentTracker tracker;
        const std::vector<Geofence> fences{square_fence(7)};
        std::size_t alarms = 0;
        std::int64_t t = 0;
        alarms += tracker.observe(kTerminal, {0.5, 0.5}, fences, t++).size();
        for (int i = 0; i < k; ++i) {
            alarms += tracker.observe(kTerminal, {1.5, 0.5}, fences, t++).size();
            alarms += tracker.observe(kTerminal, {1.7, 0.5}, fences, t++).size();
            alarms += tracker.observe(kTerminal, {0.5, 0.5}, fences, t++).size();
        }
        EXPECT_EQ(alarms, static_cast<std::size_t>(k));
    }
}

TEST(ContainmentTracker, DisarmedFencesNeverAlarm) {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> coord(-1, 2);
    ContainmentTracker tracker;
    const std::vector<Geofence> fences{square_fence(1, false), Geofence{2, "tri", {{0, 0}, {1, 0}, {0, 1}}, false}};
    for (int i = 0; i < 2000; ++i) {
        ASSERT_TRUE(tracker.observe(kTerminal, {coord(rng), coord(rng)}, fences, i).empty());
    }
    EXPECT_EQ(tracker.state(kTerminal, 1), FenceState::Unknown);
}

TEST(ContainmentTracker, TerminalsAndFencesAreIndependent) {
    ContainmentTracker tracker;
    const auto other = wire::Imei::from("999999999999999");
    const std::vector<Geofence> fences{square_fence(1), Geofence{2, "big", {{-5, -5}, {5, -5}, {5, 5}, {-5, 5}}, true}};
    tracker.observe(kTerminal, {0.5, 0.5}, fences, 0);
    tracker.observe(other, {3, 3}, fences, 0);
    const auto alarms = tracker.observe(kTerminal, {3, 3}, fences, 1);
    ASSERT_EQ(alarms.size(), 1u);
    EXPECT_EQ(alarms[0].fence_id, 1u);
    EXPECT_TRUE(tracker.observe(other, {3, 3}, fences, 1).empty());
    EXPECT_EQ(tracker.state(other, 1), FenceState::Outside);
    EXPECT_EQ(tracker.state(other, 2), FenceState::Inside);
}

TEST(ContainmentTracker, ResetFenceForgetsState) {
    ContainmentTracker tracker;
    const std::vector<Geofence> fences{square_fence(1)};
    tracker.observe(kTerminal, {0.5, 0.5}, fences, 0);
    tracker.reset_fence(1);
    EXPECT_EQ(tracker.state(kTerminal, 1), FenceState::Unknown);
    EXPECT_TRUE(tracker.observe(kTerminal, {3, 3}, fences, 1).empty());
}
