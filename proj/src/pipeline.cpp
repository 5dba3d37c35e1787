#include "buoytrack/pipeline.hpp"

#include "buoytrack/nmea.hpp"

namespace buoytrack::service {

Pipeline::Pipeline(store::Store& store, LiveHub& hub, PipelineOptions options)
    : store_(store), hub_(hub), options_(options) {}

void Pipeline::terminal_online(const wire::Imei& imei, std::int64_t now) {
    std::lock_guard lock(mutex_);
    store_.register_terminal(imei);
    store_.touch_terminal(imei, now);
    hub_.publish({LiveType::Status, imei, true, now});
}

void Pipeline::terminal_offline(const wire::Imei& imei, std::int64_t now) {
    std::lock_guard lock(mutex_);
    hub_.publish({LiveType::Status, imei, false, now});
}

void Pipeline::heartbeat(const wire::Imei& imei, std::int64_t now) {
    std::lock_guard lock(mutex_);
    store_.register_terminal(imei);
    store_.touch_terminal(imei, now);
}

IngestResult Pipeline::ingest_position(const wire::Imei& imei, std::uint64_t seq, std::string_view sentence,
                                       std::int64_t now) {
    nmea::GprmcFix fix;
    try {
        fix = nmea::parse_gprmc(sentence);
    } catch (const nmea::NmeaError& e) {
        throw ServiceError(Errc::BadSentence, e.what());
    }
    IngestResult result;
    if (fix.status != nmea::Status::Active || !fix.position) return result;

    store::TrackPoint p;
    p.terminal = imei;
    p.timestamp = nmea::epoch_seconds(fix).value_or(now);
    p.lat = fix.position->lat;
    p.lon = fix.position->lon;
    p.speed_knots = fix.speed_knots;
    p.course_deg = fix.course_deg;
    p.seq = seq;
    p.received_at = now;

    std::lock_guard lock(mutex_);
    store_.register_terminal(imei);
    p = store_.append_point(p);
    result.point = p;
    const auto fences = store_.list_fences();
    for (auto& alarm : tracker_.observe(imei, {p.lat, p.lon}, fences, p.timestamp, options_.boundary_epsilon)) {
        alarm = store_.append_alarm(alarm);
        hub_.publish({LiveType::Alarm, imei, alarm, now});
        result.alarms.push_back(std::move(alarm));
    }
    hub_.publish({LiveType::Position, imei, p, now});
    return result;
}

geofence::Geofence Pipeline::save_fence(geofence::Geofence fence) {
    std::lock_guard lock(mutex_);
    auto saved = store_.save_fence(std::move(fence));
    tracker_.reset_fence(saved.id);
    return saved;
}

geofence::Geofence Pipeline::set_fence_armed(geofence::FenceId id, bool armed) {
    std::lock_guard lock(mutex_);
    auto saved = store_.set_fence_armed(id, armed);
    tracker_.reset_fence(id);
    return saved;
}

void Pipeline::delete_fence(geofence::FenceId id) {
    std::lock_guard lock(mutex_);
    store_.delete_fence(id);
    tracker_.reset_fence(id);
}

}  // namespace buoytrack::service
