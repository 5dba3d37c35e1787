#pragma once

#include <random>
#include <string>

#include "buoytrack/nmea.hpp"

namespace gen {

// Any fix satisfying the GprmcFix invariants; integer seconds because the
// sentence format carries no fraction on output.
inline buoytrack::nmea::GprmcFix random_fix(std::mt19937_64& rng) {
    using namespace buoytrack::nmea;
    std::uniform_real_distribution<double> lat(-90.0, 90.0);
    std::uniform_real_distribution<double> lon(-180.0, 180.0);
    std::uniform_real_distribution<double> speed(0.0, 200.0);
    std::uniform_real_distribution<double> course(0.0, 360.0);
    std::uniform_real_distribution<double> var(-30.0, 30.0);
    std::uniform_int_distribution<int> hour(0, 23), minsec(0, 59), year(2000, 2099), month(1, 12), day(1, 31);
    std::bernoulli_distribution coin(0.5);

    GprmcFix f;
    f.talker = coin(rng) ? "GP" : "GN";
    f.status = coin(rng) ? Status::Active : Status::Void;
    f.position = buoytrack::LatLon{lat(rng), lon(rng)};
    f.speed_knots = speed(rng);
    f.course_deg = course(rng);
    f.utc_time = UtcTime{hour(rng), minsec(rng), minsec(rng), 0};
    Date d;
    do {
        d = Date{day(rng), month(rng), year(rng)};
    } while (!valid_date(d));
    f.date = d;
    if (coin(rng)) f.mag_variation_deg = var(rng);
    f.checksum_ok = true;
    return f;
}

}  // namespace gen
