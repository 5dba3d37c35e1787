#pragma once

// Terminal <-> server line protocol over TCP. One CRLF-terminated ASCII
// line per frame; every terminal frame gets exactly one reply.
//
//   terminal                      server
//   LOGIN,<imei>,<fw>        ->   ACK,LOGIN,<epoch>
//   POS,<imei>,<seq>,<rmc>   ->   ACK,POS,<seq>
//   HB,<imei>                ->   ACK,HB
//   (any rejected frame)     ->   ERR,<code>,<reason>

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <tuple>
#include <utility>
#include <variant>
#include <vector>

#include "buoytrack/detail/text.hpp"
#include "buoytrack/error.hpp"
#include "buoytrack/nmea.hpp"

namespace buoytrack::wire {

enum class Errc { BadFrame };

inline std::string_view to_string(Errc) { return "BadFrame"; }

using WireError = Error<Errc>;

inline constexpr std::size_t kMaxLineBytes = 1024;
inline constexpr int kDefaultPort = 5023;
inline constexpr std::int64_t kIdleTimeoutSeconds = 300;

/// Fifteen-digit terminal identity.
class Imei {
public:
    Imei() = default;

    static std::optional<Imei> parse(std::string_view text) {
        if (text.size() != 15 || !detail::all_digits(text)) return std::nullopt;
        Imei out;
        out.digits_ = std::string(text);
        return out;
    }

    static Imei from(std::string_view text) {
        auto imei = parse(text);
        if (!imei) throw WireError(Errc::BadFrame, "bad imei '" + std::string(text) + "'");
        return *imei;
    }

    [[nodiscard]] const std::string& str() const noexcept { return digits_; }
    [[nodiscard]] bool empty() const noexcept { return digits_.empty(); }

    friend auto operator<=>(const Imei&, const Imei&) = default;

private:
    std::string digits_;
};

struct Login {
    Imei imei;
    std::string fw_version;
    friend bool operator==(const Login&, const Login&) = default;
};
struct Pos {
    Imei imei;
    std::uint64_t seq = 0;
    std::string sentence;
    friend bool operator==(const Pos&, const Pos&) = default;
};
struct Hb {
    Imei imei;
    friend bool operator==(const Hb&, const Hb&) = default;
};
struct AckLogin {
    std::int64_t epoch_seconds = 0;
    friend bool operator==(const AckLogin&, const AckLogin&) = default;
};
struct AckPos {
    std::uint64_t seq = 0;
    friend bool operator==(const AckPos&, const AckPos&) = default;
};
struct AckHb {
    friend bool operator==(const AckHb&, const AckHb&) = default;
};
struct Err {
    std::string code;
    std::string reason;
    friend bool operator==(const Err&, const Err&) = default;
};

using WireFrame = std::variant<Login, Pos, Hb, AckLogin, AckPos, AckHb, Err>;

namespace detail {

[[noreturn]] inline void bad(std::string_view why) { throw WireError(Errc::BadFrame, std::string(why)); }

inline bool printable_ascii(std::string_view s) {
    for (char c : s) {
        if (c < 0x20 || c > 0x7E) return false;
    }
    return true;
}

inline bool valid_code(std::string_view s) {
    if (s.empty()) return false;
    for (char c : s) {
        if (!((c >= 'A' && c <= 'Z') || buoytrack::detail::is_digit(c) || c == '_')) return false;
    }
    return true;
}

}  // namespace detail

/// Parses one frame line; a trailing "\r\n" or "\n" is stripped first.
inline WireFrame decode_frame(std::string_view line) {
    if (line.size() > kMaxLineBytes) detail::bad("line exceeds 1024 bytes");
    if (!line.empty() && line.back() == '\n') line.remove_suffix(1);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (!detail::printable_ascii(line)) detail::bad("non-printable or non-ASCII byte");

    const auto comma = line.find(',');
    const auto verb = line.substr(0, comma);
    const auto rest = comma == std::string_view::npos ? std::string_view{} : line.substr(comma + 1);
    const auto fields = buoytrack::detail::split(rest, ',');

    if (verb == "LOGIN") {
        if (comma == std::string_view::npos || fields.size() != 2) detail::bad("LOGIN arity");
        if (fields[1].empty()) detail::bad("empty firmware version");
        return Login{Imei::from(fields[0]), std::string(fields[1])};
    }
    if (verb == "POS") {
        // The sentence is everything after the third comma and carries its
        // own commas.
        if (comma == std::string_view::npos || fields.size() < 3) detail::bad("POS arity");
        const auto seq = buoytrack::detail::parse_uint<std::uint64_t>(fields[1]);
        if (!seq) detail::bad("bad seq");
        const auto sentence_at = fields[0].size() + fields[1].size() + 2;
        const auto sentence = rest.substr(sentence_at);
        if (sentence.empty() || sentence[0] != '$' || sentence.find('*') == std::string_view::npos) {
            detail::bad("POS sentence must look like $...*hh");
        }
        return Pos{Imei::from(fields[0]), *seq, std::string(sentence)};
    }
    if (verb == "HB") {
        if (comma == std::string_view::npos || fields.size() != 1) detail::bad("HB arity");
        return Hb{Imei::from(fields[0])};
    }
    if (verb == "ACK") {
        if (comma == std::string_view::npos) detail::bad("ACK arity");
        if (fields[0] == "HB" && fields.size() == 1) return AckHb{};
        if (fields[0] == "POS" && fields.size() == 2) {
            const auto seq = buoytrack::detail::parse_uint<std::uint64_t>(fields[1]);
            if (!seq) detail::bad("bad seq");
            return AckPos{*seq};
        }
        if (fields[0] == "LOGIN" && fields.size() == 2) {
            const auto epoch = buoytrack::detail::parse_uint<std::int64_t>(fields[1]);
            if (!epoch) detail::bad("bad epoch");
            return AckLogin{*epoch};
        }
        detail::bad("unknown ACK");
    }
    if (verb == "ERR") {
        if (comma == std::string_view::npos || fields.size() < 2) detail::bad("ERR arity");
        if (!detail::valid_code(fields[0])) detail::bad("bad error code");
        return Err{std::string(fields[0]), std::string(rest.substr(fields[0].size() + 1))};
    }
    detail::bad("unknown verb '" + std::string(verb) + "'");
}

inline std::string encode_frame(const WireFrame& frame) {
    struct Visitor {
        std::string operator()(const Login& f) const { return "LOGIN," + f.imei.str() + "," + f.fw_version; }
        std::string operator()(const Pos& f) const {
            return "POS," + f.imei.str() + "," + std::to_string(f.seq) + "," + f.sentence;
        }
        std::string operator()(const Hb& f) const { return "HB," + f.imei.str(); }
        std::string operator()(const AckLogin& f) const { return "ACK,LOGIN," + std::to_string(f.epoch_seconds); }
        std::string operator()(const AckPos& f) const { return "ACK,POS," + std::to_string(f.seq); }
        std::string operator()(const AckHb&) const { return "ACK,HB"; }
        std::string operator()(const Err& f) const { return "ERR," + f.code + "," + f.reason; }
    };
    return std::visit(Visitor{}, frame) + "\r\n";
}

// Session ------------------------------------------------------------------

struct AwaitingLogin {
    friend bool operator==(const AwaitingLogin&, const AwaitingLogin&) = default;
};
struct Authenticated {
    Imei imei;
    friend bool operator==(const Authenticated&, const Authenticated&) = default;
};

struct Session {
    std::variant<AwaitingLogin, Authenticated> state;
    std::optional<std::uint64_t> last_seq;
    std::int64_t last_activity = 0;

    [[nodiscard]] const Imei* imei() const {
        const auto* auth = std::get_if<Authenticated>(&state);
        return auth ? &auth->imei : nullptr;
    }

    friend bool operator==(const Session&, const Session&) = default;
};

struct TerminalOnline {
    Imei imei;
    std::string fw_version;
    std::int64_t at = 0;
    friend bool operator==(const TerminalOnline&, const TerminalOnline&) = default;
};
struct PositionReceived {
    Imei imei;
    std::uint64_t seq = 0;
    std::string sentence;
    std::int64_t at = 0;
    friend bool operator==(const PositionReceived&, const PositionReceived&) = default;
};
struct HeartbeatReceived {
    Imei imei;
    std::int64_t at = 0;
    friend bool operator==(const HeartbeatReceived&, const HeartbeatReceived&) = default;
};

using ServerEvent = std::variant<TerminalOnline, PositionReceived, HeartbeatReceived>;

struct Transition {
    WireFrame reply;
    std::vector<ServerEvent> events;
    Session session;
};

/// Pure session transition for one terminal-originated frame.
inline Transition handle_frame(const Session& session, const WireFrame& frame, std::int64_t now) {
    Transition out{AckHb{}, {}, session};
    auto reject = [&](std::string code, std::string reason) {
        out.reply = Err{std::move(code), std::move(reason)};
        out.events.clear();
        out.session = session;
        return out;
    };

    const Imei* current = session.imei();

    if (const auto* login = std::get_if<Login>(&frame)) {
        if (current) return reject("RELOGIN", "already logged in");
        out.session.state = Authenticated{login->imei};
        out.session.last_activity = now;
        out.reply = AckLogin{now};
        out.events.push_back(TerminalOnline{login->imei, login->fw_version, now});
        return out;
    }

    if (const auto* pos = std::get_if<Pos>(&frame)) {
        if (!current) return reject("NOLOGIN", "login required");
        if (pos->imei != *current) return reject("IMEI", "imei does not match session");
        if (session.last_seq && pos->seq <= *session.last_seq) {
            return reject("SEQ", "seq " + std::to_string(pos->seq) + " not after " +
                                     std::to_string(*session.last_seq));
        }
        try {
            (void)nmea::parse_gprmc(pos->sentence);
        } catch (const nmea::NmeaError& e) {
            return reject("BADPOS", e.what());
        }
        out.session.last_seq = pos->seq;
        out.session.last_activity = now;
        out.reply = AckPos{pos->seq};
        out.events.push_back(PositionReceived{pos->imei, pos->seq, pos->sentence, now});
        return out;
    }

    if (const auto* hb = std::get_if<Hb>(&frame)) {
        if (!current) return reject("NOLOGIN", "login required");
        if (hb->imei != *current) return reject("IMEI", "imei does not match session");
        out.session.last_activity = now;
        out.reply = AckHb{};
        out.events.push_back(HeartbeatReceived{hb->imei, now});
        return out;
    }

    return reject("BADFRAME", "server frames are not accepted from terminals");
}

}  // namespace buoytrack::wire
