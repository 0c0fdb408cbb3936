#pragma once

#include <atomic>
#include <cstdint>
#include <memory>
#include <string>
#include <thread>

#include "teleop/bridge.hpp"

namespace teleop {

struct ServerOptions {
    std::string address = "0.0.0.0";
    unsigned short port = 8765;  // 0 picks a free port, see Server::port()
    // Wall-clock pacing at the control rate. Without it ticks run back to back
    // (simulated time) while at least one client is connected.
    bool realtime = false;
    std::size_t outbound_queue = 64;  // per connection; state frames drop oldest first
};

// WebSocket endpoint at "/" carrying the wire protocol (one JSON message per
// text frame) plus read-only HTTP GET endpoints on the same port:
//   /chain   chain document
//   /scene   scene document (404 without a scene)
//   /health  {"ok": true}
// The control loop runs on its own thread and owns the Bridge; the network
// thread only parses frames into the mailbox and writes replies/broadcasts.
class Server {
  public:
    Server(Bridge& bridge, ServerOptions options);
    ~Server();
    Server(const Server&) = delete;
    Server& operator=(const Server&) = delete;

    // Binds and starts the network and control threads. Throws on bind failure.
    void start();
    // Cooperative shutdown observed at the next tick boundary.
    void stop();
    void wait();

    unsigned short port() const noexcept { return bound_port_; }
    std::size_t connections() const;

    struct Impl;

  private:
    std::unique_ptr<Impl> impl_;
    unsigned short bound_port_ = 0;
};

} // namespace teleop
