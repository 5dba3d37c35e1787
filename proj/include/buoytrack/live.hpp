#pragma once

// Fan-out of live events to push-channel subscribers. Each subscriber owns a
// bounded queue; a subscriber that falls behind is closed rather than
// allowed to stall ingestion.

#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <memory>
#include <mutex>
#include <optional>
#include <variant>
#include <vector>

#include <json.hpp>

#include "buoytrack/geofence.hpp"
#include "buoytrack/store.hpp"
#include "buoytrack/wire.hpp"

namespace buoytrack::service {

enum class LiveType { Position, Alarm, Status };

std::string_view to_string(LiveType t);

struct LiveEvent {
    LiveType type = LiveType::Position;
    wire::Imei terminal;
    // TrackPoint for Position, AlarmEvent for Alarm, online flag for Status.
    std::variant<store::TrackPoint, geofence::AlarmEvent, bool> payload;
    std::int64_t server_time = 0;
};

nlohmann::json to_json(const LiveEvent& e);

class Subscription {
public:
    explicit Subscription(std::size_t capacity) : capacity_(capacity) {}

    /// Waits up to `timeout` for the next event. Returns nullopt on timeout
    /// or once the subscription is closed and drained.
    std::optional<LiveEvent> next(std::chrono::milliseconds timeout);

    [[nodiscard]] bool closed() const;
    /// True if the subscription was closed because its queue overflowed.
    [[nodiscard]] bool overflowed() const;

private:
    friend class LiveHub;

    // Returns false if the event did not fit and the subscription closed.
    bool push(const LiveEvent& e);
    void close();

    const std::size_t capacity_;
    mutable std::mutex mutex_;
    std::condition_variable cv_;
    std::deque<LiveEvent> queue_;
    bool closed_ = false;
    bool overflowed_ = false;
};

class LiveHub {
public:
    static constexpr std::size_t kDefaultQueueCapacity = 4096;

    explicit LiveHub(std::size_t queue_capacity = kDefaultQueueCapacity) : capacity_(queue_capacity) {}

    std::shared_ptr<Subscription> subscribe();
    void unsubscribe(const std::shared_ptr<Subscription>& sub);
    /// Never blocks on a subscriber.
    void publish(const LiveEvent& e);
    /// Closes every subscription; used on shutdown.
    void close_all();
    [[nodiscard]] std::size_t subscriber_count() const;

private:
    const std::size_t capacity_;
    mutable std::mutex mutex_;
    std::vector<std::shared_ptr<Subscription>> subs_;
};

}  // namespace buoytrack::service
