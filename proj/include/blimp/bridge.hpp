#pragma once

#include "blimp/scenario.hpp"

#include <cstdint>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>

namespace blimp::bridge {

class BindError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct ServeOptions {
    unsigned short port = 8765;          // 0 picks a free port
    double frame_rate = 20.0;            // Hz, wall clock
    double timescale = 1.0;              // simulated seconds per wall second
    std::string address = "127.0.0.1";
    std::string log_path;                // telemetry CSV at the control rate, empty for none
    std::optional<double> stop_after;    // simulated seconds
    std::size_t queue_capacity = 256;    // pending commands across all clients
};

/// Live service: steps the simulation pinned to the wall clock, applies
/// operator commands in arrival order at step boundaries and broadcasts
/// telemetry frames to every connected WebSocket client.
class Server {
public:
    /// Binds the listening socket. Throws BindError.
    Server(const scenario::ScenarioSpec& spec, ServeOptions opts);
    ~Server();
    Server(const Server&) = delete;
    Server& operator=(const Server&) = delete;

    unsigned short port() const;

    /// Blocks until stop(), SIGINT/SIGTERM or the stop_after time.
    void run();
    /// Safe from any thread.
    void stop();

    /// Simulated time, readable from any thread.
    double sim_time() const;

private:
    friend class Session;
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

}  // namespace blimp::bridge
