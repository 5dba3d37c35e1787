#include "buoytrack/live.hpp"

#include <algorithm>

#include "buoytrack/json_io.hpp"

namespace buoytrack::service {

std::string_view to_string(LiveType t) {
    switch (t) {
        case LiveType::Position: return "position";
        case LiveType::Alarm: return "alarm";
        case LiveType::Status: return "status";
    }
    return "unknown";
}

nlohmann::json to_json(const LiveEvent& e) {
    nlohmann::json j{{"type", to_string(e.type)}, {"terminal", e.terminal.str()}, {"server_time", e.server_time}};
    if (const auto* p = std::get_if<store::TrackPoint>(&e.payload)) {
        j["point"] = json_io::to_json(*p);
    } else if (const auto* a = std::get_if<geofence::AlarmEvent>(&e.payload)) {
        j["alarm"] = json_io::to_json(*a);
    } else {
        j["online"] = std::get<bool>(e.payload);
    }
    return j;
}

std::optional<LiveEvent> Subscription::next(std::chrono::milliseconds timeout) {
    std::unique_lock lock(mutex_);
    cv_.wait_for(lock, timeout, [&] { return !queue_.empty() || closed_; });
    if (queue_.empty()) return std::nullopt;
    auto e = std::move(queue_.front());
    queue_.pop_front();
    return e;
}

bool Subscription::closed() const {
    std::lock_guard lock(mutex_);
    return closed_ && queue_.empty();
}

bool Subscription::overflowed() const {
    std::lock_guard lock(mutex_);
    return overflowed_;
}

bool Subscription::push(const LiveEvent& e) {
    {
        std::lock_guard lock(mutex_);
        if (closed_) return false;
        if (queue_.size() >= capacity_) {
            // Drop the backlog too: a client that missed events must resync.
            queue_.clear();
            closed_ = true;
            overflowed_ = true;
        } else {
            queue_.push_back(e);
        }
    }
    cv_.notify_all();
    return !overflowed();
}

void Subscription::close() {
    {
        std::lock_guard lock(mutex_);
        closed_ = true;
    }
    cv_.notify_all();
}

std::shared_ptr<Subscription> LiveHub::subscribe() {
    auto sub = std::make_shared<Subscription>(capacity_);
    std::lock_guard lock(mutex_);
    subs_.push_back(sub);
    return sub;
}

void LiveHub::unsubscribe(const std::shared_ptr<Subscription>& sub) {
    sub->close();
    std::lock_guard lock(mutex_);
    std::erase(subs_, sub);
}

void LiveHub::publish(const LiveEvent& e) {
    std::lock_guard lock(mutex_);
    std::erase_if(subs_, [&](const auto& sub) { return !sub->push(e); });
}

void LiveHub::close_all() {
    std::lock_guard lock(mutex_);
    for (auto& sub : subs_) sub->close();
    subs_.clear();
}

std::size_t LiveHub::subscriber_count() const {
    std::lock_guard lock(mutex_);
    return subs_.size();
}

}  // namespace buoytrack::service
