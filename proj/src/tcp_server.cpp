#include "buoytrack/tcp_server.hpp"

#include <arpa/inet.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <chrono>
#include <ctime>
#include <system_error>

namespace buoytrack::service {

namespace {

std::int64_t wall_now() { return static_cast<std::int64_t>(std::time(nullptr)); }

std::system_error sys_error(const std::string& what) {
    return std::system_error(errno, std::generic_category(), what);
}

bool send_all(int fd, std::string_view data) {
    while (!data.empty()) {
        const auto n = ::send(fd, data.data(), data.size(), MSG_NOSIGNAL);
        if (n < 0) {
            if (errno == EINTR) continue;
            return false;
        }
        data.remove_prefix(static_cast<std::size_t>(n));
    }
    return true;
}

}  // namespace

TcpServer::TcpServer(Pipeline& pipeline, TcpOptions options) : pipeline_(pipeline), options_(std::move(options)) {}

TcpServer::~TcpServer() { stop(); }

void TcpServer::start() {
    listen_fd_ = ::socket(AF_INET, SOCK_STREAM | SOCK_CLOEXEC, 0);
    if (listen_fd_ < 0) throw sys_error("socket");
    int one = 1;
    ::setsockopt(listen_fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_port = htons(options_.port);
    if (::inet_pton(AF_INET, options_.bind_address.c_str(), &addr.sin_addr) != 1) {
        ::close(listen_fd_);
        listen_fd_ = -1;
        throw std::system_error(EINVAL, std::generic_category(), "bad bind address " + options_.bind_address);
    }
    if (::bind(listen_fd_, reinterpret_cast<sockaddr*>(&addr), sizeof addr) != 0 || ::listen(listen_fd_, 64) != 0) {
        auto err = sys_error("bind tcp port " + std::to_string(options_.port));
        ::close(listen_fd_);
        listen_fd_ = -1;
        throw err;
    }
    socklen_t len = sizeof addr;
    ::getsockname(listen_fd_, reinterpret_cast<sockaddr*>(&addr), &len);
    port_ = ntohs(addr.sin_port);
    stopping_ = false;
    accept_thread_ = std::thread([this] { accept_loop(); });
}

void TcpServer::stop() {
    if (stopping_.exchange(true)) return;
    // Wakes the accept loop's poll on Linux.
    if (listen_fd_ >= 0) ::shutdown(listen_fd_, SHUT_RDWR);
    if (accept_thread_.joinable()) accept_thread_.join();
    if (listen_fd_ >= 0) {
        ::close(listen_fd_);
        listen_fd_ = -1;
    }
    {
        std::lock_guard lock(conns_mutex_);
        for (auto& c : conns_) ::shutdown(c->fd, SHUT_RDWR);
    }
    reap(true);
}

std::size_t TcpServer::connection_count() const {
    std::lock_guard lock(conns_mutex_);
    std::size_t n = 0;
    for (const auto& c : conns_) n += !c->done;
    return n;
}

void TcpServer::reap(bool all) {
    std::list<std::unique_ptr<Connection>> finished;
    {
        std::lock_guard lock(conns_mutex_);
        for (auto it = conns_.begin(); it != conns_.end();) {
            if (all || (*it)->done) {
                finished.push_back(std::move(*it));
                it = conns_.erase(it);
            } else {
                ++it;
            }
        }
    }
    for (auto& c : finished) {
        if (c->thread.joinable()) c->thread.join();
        ::close(c->fd);
    }
}

void TcpServer::accept_loop() {
    while (!stopping_) {
        pollfd pfd{listen_fd_, POLLIN, 0};
        const int r = ::poll(&pfd, 1, 200);
        reap(false);
        if (r <= 0) continue;
        const int fd = ::accept4(listen_fd_, nullptr, nullptr, SOCK_CLOEXEC);
        if (fd < 0) continue;
        int one = 1;
        ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
        auto conn = std::make_unique<Connection>();
        conn->fd = fd;
        auto* raw = conn.get();
        std::lock_guard lock(conns_mutex_);
        conns_.push_back(std::move(conn));
        raw->thread = std::thread([this, raw] {
            serve(*raw);
            raw->done = true;
        });
    }
}

void TcpServer::serve(Connection& conn) {
    using clock = std::chrono::steady_clock;
    wire::Session session;
    std::string buffer;
    auto last_activity = clock::now();
    const auto idle_limit = std::chrono::seconds(options_.idle_timeout_s);
    bool open = true;

    auto reply = [&](const wire::WireFrame& f) { open = open && send_all(conn.fd, wire::encode_frame(f)); };

    auto handle_line = [&](std::string_view line) {
        const auto now = wall_now();
        wire::WireFrame frame;
        try {
            frame = wire::decode_frame(line);
        } catch (const wire::WireError& e) {
            reply(wire::Err{"BADFRAME", e.what()});
            return;
        }
        auto t = wire::handle_frame(session, frame, now);
        try {
            for (const auto& ev : t.events) {
                if (const auto* on = std::get_if<wire::TerminalOnline>(&ev)) {
                    pipeline_.terminal_online(on->imei, now);
                } else if (const auto* pos = std::get_if<wire::PositionReceived>(&ev)) {
                    pipeline_.ingest_position(pos->imei, pos->seq, pos->sentence, now);
                } else if (const auto* hb = std::get_if<wire::HeartbeatReceived>(&ev)) {
                    pipeline_.heartbeat(hb->imei, now);
                }
            }
        } catch (const ServiceError& e) {
            reply(wire::Err{"BADPOS", e.what()});
            return;
        } catch (const std::exception& e) {
            // Not persisted, so not acknowledged; the terminal may resend.
            reply(wire::Err{"STORE", e.what()});
            return;
        }
        session = std::move(t.session);
        reply(t.reply);
    };

    char chunk[4096];
    while (open && !stopping_) {
        pollfd pfd{conn.fd, POLLIN, 0};
        const int r = ::poll(&pfd, 1, 500);
        if (r < 0 && errno != EINTR) break;
        if (r <= 0) {
            if (clock::now() - last_activity >= idle_limit) break;
            continue;
        }
        const auto n = ::recv(conn.fd, chunk, sizeof chunk, 0);
        if (n <= 0) break;
        buffer.append(chunk, static_cast<std::size_t>(n));
        std::size_t start = 0;
        for (auto nl = buffer.find('\n', start); nl != std::string::npos; nl = buffer.find('\n', start)) {
            last_activity = clock::now();
            handle_line(std::string_view(buffer).substr(start, nl - start + 1));
            start = nl + 1;
            if (!open) break;
        }
        buffer.erase(0, start);
        if (buffer.size() > wire::kMaxLineBytes) {
            reply(wire::Err{"BADFRAME", "line exceeds " + std::to_string(wire::kMaxLineBytes) + " bytes"});
            break;
        }
    }
    if (const auto* imei = session.imei()) pipeline_.terminal_offline(*imei, wall_now());
}

}  // namespace buoytrack::service
