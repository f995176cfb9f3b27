#pragma once

#include <chrono>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <span>
#include <string>
#include <vector>

namespace cmarl::net {

// Thrown when a peer disconnects or a socket call fails.
class LinkError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Stream socket carrying length-prefixed frames.
class Connection {
public:
    Connection() = default;
    explicit Connection(int fd);
    Connection(Connection&& other) noexcept;
    Connection& operator=(Connection&& other) noexcept;
    Connection(const Connection&) = delete;
    Connection& operator=(const Connection&) = delete;
    ~Connection();

    bool open() const noexcept { return fd_ >= 0; }
    int fd() const noexcept { return fd_; }
    void close() noexcept;

    // Writes a complete frame; gives up with LinkError after `timeout`.
    void send(std::span<const std::uint8_t> frame, std::chrono::milliseconds timeout = std::chrono::seconds(5));
    // Waits up to `timeout` for data and returns every complete frame body received.
    // Throws LinkError when the peer has closed the stream.
    std::vector<std::vector<std::uint8_t>> receive(std::chrono::milliseconds timeout);

private:
    int fd_ = -1;
    std::vector<std::uint8_t> pending_;
};

class Listener {
public:
    // Binds 127.0.0.1:`port`; port 0 picks a free one.
    explicit Listener(std::uint16_t port = 0);
    Listener(const Listener&) = delete;
    Listener& operator=(const Listener&) = delete;
    ~Listener();

    std::uint16_t port() const noexcept { return port_; }
    std::optional<Connection> accept(std::chrono::milliseconds timeout);
    void close() noexcept;
    bool open() const noexcept { return fd_ >= 0; }

private:
    int fd_ = -1;
    std::uint16_t port_ = 0;
};

// Returns nullopt if nothing accepts the connection within `timeout`.
std::optional<Connection> connect_local(std::uint16_t port, std::chrono::milliseconds timeout);

}  // namespace cmarl::net
