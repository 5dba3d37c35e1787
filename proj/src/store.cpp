#include "buoytrack/store.hpp"

#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <cstring>
#include <fstream>
#include <mutex>
#include <sstream>
#include <tuple>

#include "buoytrack/json_io.hpp"

namespace buoytrack::store {

using json = nlohmann::json;

namespace {

constexpr int kRecordVersion = 1;
constexpr const char* kJournalFile = "journal.ndjson";

std::string record(std::string_view kind, json data) {
    return json{{"kind", kind}, {"v", kRecordVersion}, {"data", std::move(data)}}.dump();
}

json fence_payload(const geofence::Geofence& f) {
    json vertices = json::array();
    for (const auto& v : f.vertices) vertices.push_back({v.lat, v.lon});
    return {{"id", f.id}, {"name", f.name}, {"armed", f.armed}, {"vertices", vertices}};
}

geofence::Geofence fence_from_payload(const json& j) {
    geofence::Geofence f;
    f.id = j.at("id").get<geofence::FenceId>();
    f.name = j.at("name").get<std::string>();
    f.armed = j.at("armed").get<bool>();
    for (const auto& v : j.at("vertices")) f.vertices.push_back({v.at(0).get<double>(), v.at(1).get<double>()});
    return f;
}

void check_point(const TrackPoint& p) {
    if (!in_range({p.lat, p.lon})) throw StoreError(Errc::InvalidPoint, "coordinates out of range");
    if (p.timestamp <= 0) throw StoreError(Errc::InvalidPoint, "timestamp must be positive");
    if (!(p.speed_knots >= 0.0)) throw StoreError(Errc::InvalidPoint, "negative speed");
    if (!(p.course_deg >= 0.0 && p.course_deg < 360.0)) throw StoreError(Errc::InvalidPoint, "course out of range");
}

// UTF-8 code points, so the length limit is in characters rather than bytes.
std::size_t char_count(std::string_view s) {
    return static_cast<std::size_t>(
        std::count_if(s.begin(), s.end(), [](char c) { return (static_cast<unsigned char>(c) & 0xC0) != 0x80; }));
}

}  // namespace

std::string_view to_string(Errc e) {
    switch (e) {
        case Errc::UnknownTerminal: return "UnknownTerminal";
        case Errc::BadWindow: return "BadWindow";
        case Errc::WindowTooLarge: return "WindowTooLarge";
        case Errc::InvalidPoint: return "InvalidPoint";
        case Errc::InvalidPolygon: return "InvalidPolygon";
        case Errc::UnknownFence: return "UnknownFence";
        case Errc::UnknownLabel: return "UnknownLabel";
        case Errc::EmptyText: return "EmptyText";
        case Errc::TextTooLong: return "TextTooLong";
        case Errc::DuplicateName: return "DuplicateName";
        case Errc::CorruptJournal: return "CorruptJournal";
        case Errc::Io: return "Io";
    }
    return "Unknown";
}

bool Store::PointOrder::operator()(const TrackPoint& a, const TrackPoint& b) const {
    return std::tie(a.timestamp, a.seq, a.id) < std::tie(b.timestamp, b.seq, b.id);
}

Store::Store(std::filesystem::path data_dir, StoreOptions options)
    : data_dir_(std::move(data_dir)), journal_path_(data_dir_ / kJournalFile), options_(options) {
    std::error_code ec;
    if (!options_.read_only) std::filesystem::create_directories(data_dir_, ec);
    if (ec) throw StoreError(Errc::Io, "cannot create " + data_dir_.string() + ": " + ec.message());
    std::unique_lock lock(mutex_);
    replay_locked();
    if (!options_.read_only) open_for_append();
}

Store::~Store() {
    if (journal_) std::fclose(journal_);
}

void Store::open_for_append() {
    if (journal_) std::fclose(journal_);
    journal_ = std::fopen(journal_path_.c_str(), "ab");
    if (!journal_) {
        throw StoreError(Errc::Io, "cannot open " + journal_path_.string() + ": " + std::strerror(errno));
    }
}

void Store::write_record(const std::string& line) {
    if (!journal_) throw StoreError(Errc::Io, "store is read-only");
    if (std::fwrite(line.data(), 1, line.size(), journal_) != line.size() || std::fputc('\n', journal_) == EOF ||
        std::fflush(journal_) != 0) {
        throw StoreError(Errc::Io, std::string("journal write failed: ") + std::strerror(errno));
    }
    if (options_.fsync && ::fdatasync(::fileno(journal_)) != 0) {
        throw StoreError(Errc::Io, std::string("journal sync failed: ") + std::strerror(errno));
    }
}

void Store::replay() {
    std::unique_lock lock(mutex_);
    replay_locked();
}

void Store::replay_locked() {
    std::ifstream in(journal_path_, std::ios::binary);
    if (!in) return;
    std::stringstream buf;
    buf << in.rdbuf();
    const std::string text = buf.str();

    std::size_t pos = 0;
    std::size_t line_no = 0;
    while (pos < text.size()) {
        const auto nl = text.find('\n', pos);
        ++line_no;
        if (nl == std::string::npos) {
            // Unterminated tail: a write that was cut short. Keep it only if it
            // is a complete record; otherwise drop it so the next append
            // starts on a clean line.
            const std::string tail = text.substr(pos);
            bool complete = true;
            try {
                apply(tail, line_no);
            } catch (const StoreError&) {
                complete = false;
            }
            if (options_.read_only) return;
            std::error_code ec;
            if (complete) {
                std::ofstream(journal_path_, std::ios::binary | std::ios::app) << '\n';
            } else {
                std::filesystem::resize_file(journal_path_, pos, ec);
                if (ec) throw StoreError(Errc::Io, "cannot truncate torn journal tail: " + ec.message());
            }
            return;
        }
        const std::string line = text.substr(pos, nl - pos);
        if (!line.empty()) apply(line, line_no);
        pos = nl + 1;
    }
}

void Store::apply(const std::string& line, std::size_t line_no) {
    auto corrupt = [&](const std::string& why) {
        return StoreError(Errc::CorruptJournal, "line " + std::to_string(line_no) + ": " + why);
    };
    json rec;
    try {
        rec = json::parse(line);
    } catch (const json::exception& e) {
        throw corrupt(e.what());
    }
    try {
        const auto kind = rec.at("kind").get<std::string>();
        const int version = rec.at("v").get<int>();
        if (version != kRecordVersion) throw corrupt("unsupported record version " + std::to_string(version));
        const json& d = rec.at("data");

        if (kind == "terminal") {
            const auto imei = wire::Imei::from(d.at("imei").get<std::string>());
            auto& t = terminals_[imei];
            t.imei = imei;
            t.name = d.at("name").get<std::string>();
        } else if (kind == "seen") {
            const auto imei = wire::Imei::from(d.at("imei").get<std::string>());
            auto it = terminals_.find(imei);
            if (it == terminals_.end()) throw corrupt("seen record for unknown terminal");
            const auto at = d.at("at").get<std::int64_t>();
            it->second.last_seen = std::max(it->second.last_seen.value_or(at), at);
        } else if (kind == "point") {
            auto p = json_io::point_from_json(d);
            auto it = terminals_.find(p.terminal);
            if (it == terminals_.end()) throw corrupt("point for unknown terminal");
            next_point_id_ = std::max(next_point_id_, p.id + 1);
            if (!point_ids_.insert(p.id).second) return;
            auto& track = points_[p.terminal];
            track.insert(std::upper_bound(track.begin(), track.end(), p, PointOrder{}), p);
            if (p.received_at > 0) {
                it->second.last_seen = std::max(it->second.last_seen.value_or(p.received_at), p.received_at);
            }
        } else if (kind == "fence") {
            auto f = fence_from_payload(d);
            next_fence_id_ = std::max(next_fence_id_, f.id + 1);
            fences_[f.id] = std::move(f);
        } else if (kind == "fence_deleted") {
            const auto id = d.at("id").get<geofence::FenceId>();
            next_fence_id_ = std::max(next_fence_id_, id + 1);
            fences_.erase(id);
        } else if (kind == "label") {
            auto l = json_io::label_from_json(d);
            next_label_id_ = std::max(next_label_id_, l.id + 1);
            labels_[l.id] = std::move(l);
        } else if (kind == "label_deleted") {
            const auto id = d.at("id").get<std::uint64_t>();
            next_label_id_ = std::max(next_label_id_, id + 1);
            labels_.erase(id);
        } else if (kind == "alarm") {
            auto a = json_io::alarm_from_json(d);
            next_alarm_id_ = std::max(next_alarm_id_, a.id + 1);
            alarms_[a.id] = std::move(a);
        } else {
            throw corrupt("unknown record kind '" + kind + "'");
        }
    } catch (const json::exception& e) {
        throw corrupt(e.what());
    } catch (const wire::WireError& e) {
        throw corrupt(e.what());
    }
}

// Terminals ---------------------------------------------------------------

Terminal Store::register_terminal(const wire::Imei& imei) {
    std::unique_lock lock(mutex_);
    if (auto it = terminals_.find(imei); it != terminals_.end()) return it->second;
    const auto line = record("terminal", {{"imei", imei.str()}, {"name", imei.str()}});
    write_record(line);
    apply(line, 0);
    return terminals_.at(imei);
}

void Store::touch_terminal(const wire::Imei& imei, std::int64_t now) {
    std::unique_lock lock(mutex_);
    if (!terminals_.contains(imei)) throw StoreError(Errc::UnknownTerminal, imei.str());
    const auto line = record("seen", {{"imei", imei.str()}, {"at", now}});
    write_record(line);
    apply(line, 0);
}

Terminal Store::rename_terminal(const wire::Imei& imei, std::string name) {
    std::unique_lock lock(mutex_);
    auto it = terminals_.find(imei);
    if (it == terminals_.end()) throw StoreError(Errc::UnknownTerminal, imei.str());
    if (name.empty()) throw StoreError(Errc::EmptyText, "terminal name");
    for (const auto& [other, t] : terminals_) {
        if (other != imei && (t.name == name || other.str() == name)) {
            throw StoreError(Errc::DuplicateName, name);
        }
    }
    const auto line = record("terminal", {{"imei", imei.str()}, {"name", name}});
    write_record(line);
    apply(line, 0);
    return it->second;
}

std::optional<wire::Imei> Store::resolve_locked(std::string_view ref) const {
    if (auto imei = wire::Imei::parse(ref); imei && terminals_.contains(*imei)) return imei;
    for (const auto& [imei, t] : terminals_) {
        if (t.name == ref) return imei;
    }
    return std::nullopt;
}

std::optional<Terminal> Store::find_terminal(std::string_view ref) const {
    std::shared_lock lock(mutex_);
    auto imei = resolve_locked(ref);
    if (!imei) return std::nullopt;
    return terminals_.at(*imei);
}

TerminalStatus Store::status_locked(const Terminal& t, std::int64_t now, std::int64_t window) const {
    TerminalStatus s{t, t.last_seen && *t.last_seen >= now - window, std::nullopt};
    if (auto it = points_.find(t.imei); it != points_.end() && !it->second.empty()) {
        s.last_point = it->second.back();
    }
    return s;
}

std::vector<TerminalStatus> Store::terminals(std::int64_t now, std::int64_t online_window_s) const {
    std::shared_lock lock(mutex_);
    std::vector<TerminalStatus> out;
    for (const auto& [imei, t] : terminals_) out.push_back(status_locked(t, now, online_window_s));
    return out;
}

std::vector<TerminalStatus> Store::online_terminals(std::int64_t now, std::int64_t online_window_s) const {
    auto all = terminals(now, online_window_s);
    std::erase_if(all, [](const TerminalStatus& s) { return !s.online; });
    return all;
}

// Track points ----------------------------------------------------------------

TrackPoint Store::append_point(TrackPoint p) {
    check_point(p);
    std::unique_lock lock(mutex_);
    if (!terminals_.contains(p.terminal)) throw StoreError(Errc::UnknownTerminal, p.terminal.str());
    p.id = next_point_id_;
    const auto line = record("point", json_io::to_json(p));
    write_record(line);
    apply(line, 0);
    return p;
}

std::vector<TrackPoint> Store::query_track(std::string_view terminal_ref, std::int64_t from, std::int64_t to) const {
    if (from >= to) throw StoreError(Errc::BadWindow, "from must be before to");
    if (to - from > kMaxTrackWindowSeconds) {
        throw StoreError(Errc::WindowTooLarge, std::to_string(to - from) + " s exceeds " +
                                                   std::to_string(kMaxTrackWindowSeconds) + " s");
    }
    std::shared_lock lock(mutex_);
    const auto imei = resolve_locked(terminal_ref);
    if (!imei) throw StoreError(Errc::UnknownTerminal, std::string(terminal_ref));
    auto it = points_.find(*imei);
    if (it == points_.end()) return {};
    const auto& track = it->second;
    auto first = std::partition_point(track.begin(), track.end(), [&](const TrackPoint& p) { return p.timestamp < from; });
    auto last = std::partition_point(first, track.end(), [&](const TrackPoint& p) { return p.timestamp <= to; });
    return {first, last};
}

std::size_t Store::point_count() const {
    std::shared_lock lock(mutex_);
    return point_ids_.size();
}

// Fences ------------------------------------------------------------------------

geofence::Geofence Store::save_fence(geofence::Geofence fence) {
    try {
        geofence::validate_polygon(fence.vertices);
    } catch (const geofence::FenceError& e) {
        throw StoreError(Errc::InvalidPolygon, e.what());
    }
    std::unique_lock lock(mutex_);
    if (fence.id == 0) {
        fence.id = next_fence_id_;
    } else if (!fences_.contains(fence.id)) {
        throw StoreError(Errc::UnknownFence, std::to_string(fence.id));
    }
    const auto line = record("fence", fence_payload(fence));
    write_record(line);
    apply(line, 0);
    return fence;
}

geofence::Geofence Store::set_fence_armed(geofence::FenceId id, bool armed) {
    std::unique_lock lock(mutex_);
    auto it = fences_.find(id);
    if (it == fences_.end()) throw StoreError(Errc::UnknownFence, std::to_string(id));
    auto fence = it->second;
    fence.armed = armed;
    const auto line = record("fence", fence_payload(fence));
    write_record(line);
    apply(line, 0);
    return fence;
}

void Store::delete_fence(geofence::FenceId id) {
    std::unique_lock lock(mutex_);
    if (!fences_.contains(id)) throw StoreError(Errc::UnknownFence, std::to_string(id));
    const auto line = record("fence_deleted", {{"id", id}});
    write_record(line);
    apply(line, 0);
}

std::vector<geofence::Geofence> Store::list_fences() const {
    std::shared_lock lock(mutex_);
    std::vector<geofence::Geofence> out;
    for (const auto& [id, f] : fences_) out.push_back(f);
    return out;
}

// Labels ------------------------------------------------------------------------

MapLabel Store::save_label(const LatLon& position, std::string text, std::int64_t now) {
    if (text.empty()) throw StoreError(Errc::EmptyText, "label text");
    if (char_count(text) > kMaxLabelChars) throw StoreError(Errc::TextTooLong, "label text over 280 characters");
    if (!in_range(position)) throw StoreError(Errc::InvalidPoint, "label position out of range");
    std::unique_lock lock(mutex_);
    MapLabel label{next_label_id_, position, std::move(text), now};
    const auto line = record("label", json_io::to_json(label));
    write_record(line);
    apply(line, 0);
    return label;
}

void Store::delete_label(std::uint64_t id) {
    std::unique_lock lock(mutex_);
    if (!labels_.contains(id)) throw StoreError(Errc::UnknownLabel, std::to_string(id));
    const auto line = record("label_deleted", {{"id", id}});
    write_record(line);
    apply(line, 0);
}

std::vector<MapLabel> Store::list_labels() const {
    std::shared_lock lock(mutex_);
    std::vector<MapLabel> out;
    for (const auto& [id, l] : labels_) out.push_back(l);
    return out;
}

// Alarms ------------------------------------------------------------------------

geofence::AlarmEvent Store::append_alarm(geofence::AlarmEvent alarm) {
    std::unique_lock lock(mutex_);
    alarm.id = next_alarm_id_;
    const auto line = record("alarm", json_io::to_json(alarm));
    write_record(line);
    apply(line, 0);
    return alarm;
}

std::vector<geofence::AlarmEvent> Store::list_alarms(std::int64_t from, std::int64_t to) const {
    std::shared_lock lock(mutex_);
    std::vector<geofence::AlarmEvent> out;
    for (const auto& [id, a] : alarms_) {
        if (a.timestamp >= from && a.timestamp <= to) out.push_back(a);
    }
    std::stable_sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.timestamp < b.timestamp; });
    return out;
}

// Compaction ----------------------------------------------------------------------

void Store::compact() {
    std::unique_lock lock(mutex_);
    if (options_.read_only) throw StoreError(Errc::Io, "store is read-only");
    const auto tmp = journal_path_.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw StoreError(Errc::Io, "cannot write " + tmp);
        for (const auto& [imei, t] : terminals_) {
            out << record("terminal", {{"imei", imei.str()}, {"name", t.name}}) << '\n';
            if (t.last_seen) out << record("seen", {{"imei", imei.str()}, {"at", *t.last_seen}}) << '\n';
        }
        for (const auto& [imei, track] : points_) {
            for (const auto& p : track) out << record("point", json_io::to_json(p)) << '\n';
        }
        for (const auto& [id, f] : fences_) out << record("fence", fence_payload(f)) << '\n';
        // Keep id counters monotone across compaction.
        if (next_fence_id_ > 1 && !fences_.contains(next_fence_id_ - 1)) {
            out << record("fence_deleted", {{"id", next_fence_id_ - 1}}) << '\n';
        }
        for (const auto& [id, l] : labels_) out << record("label", json_io::to_json(l)) << '\n';
        if (next_label_id_ > 1 && !labels_.contains(next_label_id_ - 1)) {
            out << record("label_deleted", {{"id", next_label_id_ - 1}}) << '\n';
        }
        for (const auto& [id, a] : alarms_) out << record("alarm", json_io::to_json(a)) << '\n';
        out.flush();
        if (!out) throw StoreError(Errc::Io, "short write to " + tmp);
    }
    std::error_code ec;
    std::filesystem::rename(tmp, journal_path_, ec);
    if (ec) throw StoreError(Errc::Io, "cannot replace journal: " + ec.message());
    open_for_append();
}

}  // namespace buoytrack::store
