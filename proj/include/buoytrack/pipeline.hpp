#pragma once

// Position ingestion: parse, persist, evaluate fences, broadcast. Every
// mutation that affects live subscribers goes through here so that a
// broadcast never precedes the write it describes.

#include <cstdint>
#include <mutex>
#include <optional>
#include <string_view>

#include "buoytrack/error.hpp"
#include "buoytrack/geofence.hpp"
#include "buoytrack/live.hpp"
#include "buoytrack/store.hpp"
#include "buoytrack/wire.hpp"

namespace buoytrack::service {

enum class Errc { BadSentence };

inline std::string_view to_string(Errc e) {
    switch (e) {
        case Errc::BadSentence: return "BadSentence";
    }
    return "Unknown";
}

using ServiceError = Error<Errc>;

struct PipelineOptions {
    double boundary_epsilon = geofence::kBoundaryEpsilon;
};

struct IngestResult {
    // Empty for a Void fix, which is acknowledged but not stored.
    std::optional<store::TrackPoint> point;
    std::vector<geofence::AlarmEvent> alarms;
};

class Pipeline {
public:
    Pipeline(store::Store& store, LiveHub& hub, PipelineOptions options = {});

    /// Registers the terminal if needed, marks it seen and announces it.
    void terminal_online(const wire::Imei& imei, std::int64_t now);
    void terminal_offline(const wire::Imei& imei, std::int64_t now);
    void heartbeat(const wire::Imei& imei, std::int64_t now);

    /// Throws ServiceError(BadSentence) for unparsable or checksum-failed
    /// sentences, and StoreError if persisting fails.
    IngestResult ingest_position(const wire::Imei& imei, std::uint64_t seq, std::string_view sentence,
                                 std::int64_t now);

    // Fence edits reset containment memory for the fence.
    geofence::Geofence save_fence(geofence::Geofence fence);
    geofence::Geofence set_fence_armed(geofence::FenceId id, bool armed);
    void delete_fence(geofence::FenceId id);

    [[nodiscard]] store::Store& store() { return store_; }

private:
    store::Store& store_;
    LiveHub& hub_;
    PipelineOptions options_;
    std::mutex mutex_;
    geofence::ContainmentTracker tracker_;
};

}  // namespace buoytrack::service
