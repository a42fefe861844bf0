#pragma once

// Live service: WebSocket protocol and HTTP routes on one port, plus the
// control-loop thread that owns the simulated robot. Implemented in
// src/service.cpp (Boost.Beast); link teleskill_service.

#include "teleskill/sim_config.hpp"

#include <cstdint>
#include <memory>
#include <string>

namespace teleskill {

class ServiceError : public Error {
public:
    using Error::Error;
};

class Service {
public:
    explicit Service(SimConfig config);
    ~Service();
    Service(const Service&) = delete;
    Service& operator=(const Service&) = delete;

    /// Binds and starts the network and control threads. Port 0 in the
    /// config picks a free port; see port().
    void start();
    /// Blocks until stop() is called (from another thread or a signal handler).
    void wait();
    void stop();

    std::uint16_t port() const;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

/// Minimal blocking WebSocket client for the CLI and tests.
class WsClient {
public:
    /// url: ws://host:port[/path]
    explicit WsClient(const std::string& url);
    ~WsClient();
    WsClient(const WsClient&) = delete;
    WsClient& operator=(const WsClient&) = delete;

    void send(const std::string& text);
    /// Next text frame. Throws ServiceError when the connection closes or no
    /// frame arrives within timeout_s.
    std::string receive(double timeout_s = 30.0);
    void close();

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

/// Plain HTTP GET against the service; returns {status, body}.
struct HttpReply {
    int status = 0;
    std::string body;
    std::string content_type;
};
HttpReply http_get(const std::string& host, std::uint16_t port, const std::string& target);

}  // namespace teleskill
