#pragma once

// Simulated locator terminal: runs the device state machine on a virtual
// clock and reports route fixes to a server over the line protocol.
//
// Fix times advance by the route's report interval per report, starting at
// start_epoch; `wall_interval_s` only paces the real sending rate. The
// registration and GPRS-attach delays are spent on the virtual clock.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "buoytrack/devicesim.hpp"
#include "buoytrack/wire.hpp"

namespace buoytrack::service {

struct SimOptions {
    std::string host = "127.0.0.1";
    std::uint16_t port = wire::kDefaultPort;
    wire::Imei imei;
    devicesim::Route route;
    std::uint64_t count = 1;        // POS frames to send
    double wall_interval_s = 1.0;   // real time between reports
    std::int64_t start_epoch = 0;   // virtual clock origin; 0 = now
    std::string firmware = "sim-1.0";
    std::int64_t idle_timeout_s = devicesim::kDefaultIdleTimeoutSeconds;
    std::int64_t registration_delay_s = devicesim::kDefaultRegistrationDelaySeconds;
    std::int64_t attach_delay_s = devicesim::kDefaultGprsAttachDelaySeconds;
    // After this many reports, data requests stop and the device drifts into
    // power save once the idle timeout elapses. Unset: every report counts as
    // a data request and power save never happens.
    std::optional<std::uint64_t> idle_after;
    // Virtual seconds spent in power save before a data request wakes the
    // device. Unset: the run ends at power save.
    std::optional<std::int64_t> data_request_after_s;
    double ack_timeout_s = 10.0;
};

struct SimReport {
    std::uint64_t sent = 0;
    std::uint64_t acked = 0;
    std::uint64_t logins = 0;
    std::vector<std::string> errors;  // ERR replies and transport problems
    devicesim::Phase final_phase = devicesim::Phase::Off;
    std::int64_t virtual_end = 0;
};

/// Runs the simulation to completion. Throws std::runtime_error if the
/// server cannot be reached or stops answering.
SimReport run_sim(const SimOptions& options, std::ostream* log = nullptr);

}  // namespace buoytrack::service
