#include "buoytrack/sim_client.hpp"

#include <netdb.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <chrono>
#include <cstring>
#include <ctime>
#include <ostream>
#include <stdexcept>
#include <thread>

#include "buoytrack/nmea.hpp"

namespace buoytrack::service {

namespace {

using devicesim::DeviceEvent;
using devicesim::Phase;

class LineConnection {
public:
    LineConnection(const std::string& host, std::uint16_t port) {
        addrinfo hints{};
        hints.ai_family = AF_UNSPEC;
        hints.ai_socktype = SOCK_STREAM;
        addrinfo* res = nullptr;
        if (const int rc = ::getaddrinfo(host.c_str(), std::to_string(port).c_str(), &hints, &res); rc != 0) {
            throw std::runtime_error("resolve " + host + ": " + ::gai_strerror(rc));
        }
        for (auto* ai = res; ai; ai = ai->ai_next) {
            fd_ = ::socket(ai->ai_family, ai->ai_socktype | SOCK_CLOEXEC, ai->ai_protocol);
            if (fd_ < 0) continue;
            if (::connect(fd_, ai->ai_addr, ai->ai_addrlen) == 0) break;
            ::close(fd_);
            fd_ = -1;
        }
        ::freeaddrinfo(res);
        if (fd_ < 0) {
            throw std::runtime_error("connect " + host + ":" + std::to_string(port) + ": " + std::strerror(errno));
        }
    }
    ~LineConnection() {
        if (fd_ >= 0) ::close(fd_);
    }
    LineConnection(const LineConnection&) = delete;
    LineConnection& operator=(const LineConnection&) = delete;

    void send(const std::string& data) {
        std::string_view rest = data;
        while (!rest.empty()) {
            const auto n = ::send(fd_, rest.data(), rest.size(), MSG_NOSIGNAL);
            if (n < 0) {
                if (errno == EINTR) continue;
                throw std::runtime_error(std::string("send: ") + std::strerror(errno));
            }
            rest.remove_prefix(static_cast<std::size_t>(n));
        }
    }

    std::string read_line(double timeout_s) {
        const auto deadline = std::chrono::steady_clock::now() + std::chrono::duration<double>(timeout_s);
        for (;;) {
            if (const auto nl = buffer_.find('\n'); nl != std::string::npos) {
                auto line = buffer_.substr(0, nl + 1);
                buffer_.erase(0, nl + 1);
                return line;
            }
            const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - std::chrono::steady_clock::now());
            if (left.count() <= 0) throw std::runtime_error("timed out waiting for server reply");
            pollfd pfd{fd_, POLLIN, 0};
            const int r = ::poll(&pfd, 1, static_cast<int>(left.count()));
            if (r < 0 && errno != EINTR) throw std::runtime_error(std::string("poll: ") + std::strerror(errno));
            if (r <= 0) continue;
            char chunk[1024];
            const auto n = ::recv(fd_, chunk, sizeof chunk, 0);
            if (n <= 0) throw std::runtime_error("server closed the connection");
            buffer_.append(chunk, static_cast<std::size_t>(n));
        }
    }

private:
    int fd_ = -1;
    std::string buffer_;
};

std::string describe(const wire::WireFrame& f) {
    auto s = wire::encode_frame(f);
    while (!s.empty() && (s.back() == '\n' || s.back() == '\r')) s.pop_back();
    return s;
}

}  // namespace

SimReport run_sim(const SimOptions& o, std::ostream* log) {
    devicesim::validate_route(o.route);
    SimReport report;
    auto say = [&](const std::string& msg) {
        if (log) *log << msg << '\n' << std::flush;
    };

    const std::int64_t origin = o.start_epoch > 0 ? o.start_epoch : static_cast<std::int64_t>(std::time(nullptr));
    std::int64_t now = origin;
    devicesim::DeviceState state;
    std::unique_ptr<LineConnection> conn;
    std::optional<std::int64_t> first_fix;
    std::uint64_t seq = 0;

    auto step = [&](DeviceEvent e) {
        state = devicesim::device_step(state, e, now, o.idle_timeout_s);
        say("t=" + std::to_string(now - origin) + " " + std::string(to_string(e)) + " -> " +
            std::string(to_string(state.phase)));
    };

    // Off/PowerSave -> Reporting, including the TCP login.
    auto bring_up = [&] {
        if (state.phase == Phase::Off) step(DeviceEvent::PowerOn);
        now += o.registration_delay_s;
        step(DeviceEvent::Registered);
        now += o.attach_delay_s;
        step(DeviceEvent::GprsUp);
        conn = std::make_unique<LineConnection>(o.host, o.port);
        conn->send(wire::encode_frame(wire::Login{o.imei, o.firmware}));
        const auto reply = wire::decode_frame(conn->read_line(o.ack_timeout_s));
        if (!std::holds_alternative<wire::AckLogin>(reply)) {
            throw std::runtime_error("login rejected: " + describe(reply));
        }
        ++report.logins;
        step(DeviceEvent::FixAcquired);
        if (!first_fix) first_fix = now;
    };

    bring_up();
    const auto pace = std::chrono::duration<double>(o.wall_interval_s);
    while (report.sent < o.count) {
        const double route_t = static_cast<double>(now - *first_fix);
        const auto fix = devicesim::emit_fix(o.route, route_t, now);
        ++seq;
        conn->send(wire::encode_frame(wire::Pos{o.imei, seq, nmea::format_gprmc(fix)}));
        ++report.sent;
        const auto reply = wire::decode_frame(conn->read_line(o.ack_timeout_s));
        if (const auto* ack = std::get_if<wire::AckPos>(&reply); ack && ack->seq == seq) {
            ++report.acked;
        } else {
            report.errors.push_back("seq " + std::to_string(seq) + ": " + describe(reply));
        }
        if (!o.idle_after || report.sent < *o.idle_after) step(DeviceEvent::DataRequest);
        if (report.sent >= o.count) break;

        if (o.wall_interval_s > 0) std::this_thread::sleep_for(pace);
        now += o.route.report_interval_s;
        step(DeviceEvent::Tick);
        if (state.phase == Phase::PowerSave) {
            conn.reset();
            if (!o.data_request_after_s) break;
            now += *o.data_request_after_s;
            step(DeviceEvent::DataRequest);
            bring_up();
        }
    }
    report.final_phase = state.phase;
    report.virtual_end = now;
    return report;
}

}  // namespace buoytrack::service
