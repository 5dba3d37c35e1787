#pragma once

// Durable fleet state: terminals, track points, fences, labels and alarms.
// Everything lives in memory and every mutation is appended to a journal
// (one JSON record per line) before it becomes visible. Opening a store
// replays the journal.

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <vector>

#include "buoytrack/error.hpp"
#include "buoytrack/geo.hpp"
#include "buoytrack/geofence.hpp"
#include "buoytrack/wire.hpp"

namespace buoytrack::store {

enum class Errc {
    UnknownTerminal,
    BadWindow,
    WindowTooLarge,
    InvalidPoint,
    InvalidPolygon,
    UnknownFence,
    UnknownLabel,
    EmptyText,
    TextTooLong,
    DuplicateName,
    CorruptJournal,
    Io,
};

std::string_view to_string(Errc e);

using StoreError = Error<Errc>;

/// Longest accepted track query span, inclusive (7 x 24 h).
inline constexpr std::int64_t kMaxTrackWindowSeconds = 7 * 24 * 3600;
inline constexpr std::int64_t kDefaultOnlineWindowSeconds = 60;
inline constexpr std::size_t kMaxLabelChars = 280;

struct TrackPoint {
    std::uint64_t id = 0;  // assigned by append_point
    wire::Imei terminal;
    std::int64_t timestamp = 0;  // fix time, epoch seconds UTC
    double lat = 0.0;
    double lon = 0.0;
    double speed_knots = 0.0;
    double course_deg = 0.0;
    std::uint64_t seq = 0;
    std::int64_t received_at = 0;  // server clock

    friend bool operator==(const TrackPoint&, const TrackPoint&) = default;
};

struct Terminal {
    wire::Imei imei;
    std::string name;
    std::optional<std::int64_t> last_seen;

    friend bool operator==(const Terminal&, const Terminal&) = default;
};

struct TerminalStatus {
    Terminal terminal;
    bool online = false;
    std::optional<TrackPoint> last_point;
};

struct MapLabel {
    std::uint64_t id = 0;
    LatLon position;
    std::string text;
    std::int64_t created_at = 0;

    friend bool operator==(const MapLabel&, const MapLabel&) = default;
};

struct StoreOptions {
    // fsync after every record. Flushing to the OS always happens.
    bool fsync = true;
    // Replay only; mutations throw Io and a torn journal tail is left alone.
    bool read_only = false;
};

class Store {
public:
    explicit Store(std::filesystem::path data_dir, StoreOptions options = {});
    ~Store();

    Store(const Store&) = delete;
    Store& operator=(const Store&) = delete;

    [[nodiscard]] const std::filesystem::path& journal_path() const noexcept { return journal_path_; }

    // Terminals
    /// Registers with name = IMEI if unknown; returns the stored terminal.
    Terminal register_terminal(const wire::Imei& imei);
    void touch_terminal(const wire::Imei& imei, std::int64_t now);
    Terminal rename_terminal(const wire::Imei& imei, std::string name);
    /// Resolves a terminal by IMEI or by name.
    [[nodiscard]] std::optional<Terminal> find_terminal(std::string_view ref) const;
    [[nodiscard]] std::vector<TerminalStatus> terminals(std::int64_t now, std::int64_t online_window_s) const;
    [[nodiscard]] std::vector<TerminalStatus> online_terminals(std::int64_t now, std::int64_t online_window_s) const;

    // Track points
    TrackPoint append_point(TrackPoint p);
    /// Points with from <= timestamp <= to, ordered by (timestamp, seq).
    [[nodiscard]] std::vector<TrackPoint> query_track(std::string_view terminal_ref, std::int64_t from,
                                                      std::int64_t to) const;
    [[nodiscard]] std::size_t point_count() const;

    // Fences
    /// id 0 creates a new fence; a known id replaces it.
    geofence::Geofence save_fence(geofence::Geofence fence);
    geofence::Geofence set_fence_armed(geofence::FenceId id, bool armed);
    void delete_fence(geofence::FenceId id);
    [[nodiscard]] std::vector<geofence::Geofence> list_fences() const;

    // Labels
    MapLabel save_label(const LatLon& position, std::string text, std::int64_t now);
    void delete_label(std::uint64_t id);
    [[nodiscard]] std::vector<MapLabel> list_labels() const;

    // Alarms
    geofence::AlarmEvent append_alarm(geofence::AlarmEvent alarm);
    /// Alarms with from <= timestamp <= to, ordered by timestamp.
    [[nodiscard]] std::vector<geofence::AlarmEvent> list_alarms(std::int64_t from, std::int64_t to) const;

    /// Re-applies every journal record onto the current state. Records are
    /// idempotent, so this never changes a store that is already loaded.
    void replay();

    /// Rewrites the journal as the minimal record set for the current state.
    void compact();

private:
    struct PointOrder {
        bool operator()(const TrackPoint& a, const TrackPoint& b) const;
    };

    void open_for_append();
    void replay_locked();
    void apply(const std::string& line, std::size_t line_no);
    void write_record(const std::string& line);
    std::optional<wire::Imei> resolve_locked(std::string_view ref) const;
    TerminalStatus status_locked(const Terminal& t, std::int64_t now, std::int64_t window) const;

    std::filesystem::path data_dir_;
    std::filesystem::path journal_path_;
    StoreOptions options_;
    std::FILE* journal_ = nullptr;

    mutable std::shared_mutex mutex_;
    std::map<wire::Imei, Terminal> terminals_;
    std::map<wire::Imei, std::vector<TrackPoint>> points_;
    std::set<std::uint64_t> point_ids_;
    std::map<geofence::FenceId, geofence::Geofence> fences_;
    std::map<std::uint64_t, MapLabel> labels_;
    std::map<std::uint64_t, geofence::AlarmEvent> alarms_;
    std::uint64_t next_point_id_ = 1;
    std::uint64_t next_fence_id_ = 1;
    std::uint64_t next_label_id_ = 1;
    std::uint64_t next_alarm_id_ = 1;
};

}  // namespace buoytrack::store
