#include "cmarl/net/socket.hpp"

#include <arpa/inet.h>
#include <cerrno>
#include <cstring>
#include <fcntl.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <stdexcept>

#include "cmarl/net/protocol.hpp"

namespace cmarl::net {

namespace {

using Clock = std::chrono::steady_clock;

std::string last_error(const char* what)
{
    return std::string(what) + ": " + std::strerror(errno);
}

int wait_for(int fd, short events, std::chrono::milliseconds timeout)
{
    pollfd p{fd, events, 0};
    const int rc = ::poll(&p, 1, static_cast<int>(timeout.count()));
    if (rc < 0 && errno != EINTR) {
        throw LinkError(last_error("poll"));
    }
    return rc > 0 ? p.revents : 0;
}

void set_nonblocking(int fd)
{
    const int flags = ::fcntl(fd, F_GETFL, 0);
    ::fcntl(fd, F_SETFL, flags | O_NONBLOCK);
}

}  // namespace

Connection::Connection(int fd) : fd_{fd}
{
    set_nonblocking(fd_);
    const int one = 1;
    ::setsockopt(fd_, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
}

Connection::Connection(Connection&& other) noexcept : fd_{other.fd_}, pending_{std::move(other.pending_)}
{
    other.fd_ = -1;
}

Connection& Connection::operator=(Connection&& other) noexcept
{
    if (this != &other) {
        close();
        fd_ = other.fd_;
        pending_ = std::move(other.pending_);
        other.fd_ = -1;
    }
    return *this;
}

Connection::~Connection()
{
    close();
}

void Connection::close() noexcept
{
    if (fd_ >= 0) {
        ::shutdown(fd_, SHUT_RDWR);
        ::close(fd_);
        fd_ = -1;
    }
    pending_.clear();
}

void Connection::send(std::span<const std::uint8_t> frame, std::chrono::milliseconds timeout)
{
    if (fd_ < 0) {
        throw LinkError("send on a closed connection");
    }
    const auto deadline = Clock::now() + timeout;
    std::size_t off = 0;
    while (off < frame.size()) {
        const ssize_t n = ::send(fd_, frame.data() + off, frame.size() - off, MSG_NOSIGNAL);
        if (n > 0) {
            off += static_cast<std::size_t>(n);
            continue;
        }
        if (n < 0 && errno != EAGAIN && errno != EWOULDBLOCK && errno != EINTR) {
            throw LinkError(last_error("send"));
        }
        const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - Clock::now());
        if (left.count() <= 0) {
            throw LinkError("send timed out");
        }
        wait_for(fd_, POLLOUT, left);
    }
}

std::vector<std::vector<std::uint8_t>> Connection::receive(std::chrono::milliseconds timeout)
{
    if (fd_ < 0) {
        throw LinkError("receive on a closed connection");
    }
    std::vector<std::vector<std::uint8_t>> frames;
    const auto extract = [&] {
        std::size_t off = 0;
        while (pending_.size() - off >= 4) {
            const std::uint32_t len = static_cast<std::uint32_t>(pending_[off]) |
                                      static_cast<std::uint32_t>(pending_[off + 1]) << 8 |
                                      static_cast<std::uint32_t>(pending_[off + 2]) << 16 |
                                      static_cast<std::uint32_t>(pending_[off + 3]) << 24;
            if (len > max_frame_bytes) {
                throw LinkError("frame of " + std::to_string(len) + " bytes exceeds the limit");
            }
            if (pending_.size() - off - 4 < len) {
                break;
            }
            frames.emplace_back(pending_.begin() + static_cast<std::ptrdiff_t>(off + 4),
                                pending_.begin() + static_cast<std::ptrdiff_t>(off + 4 + len));
            off += 4 + len;
        }
        pending_.erase(pending_.begin(), pending_.begin() + static_cast<std::ptrdiff_t>(off));
    };

    if (wait_for(fd_, POLLIN, timeout) == 0) {
        return frames;
    }
    std::uint8_t chunk[65536];
    while (true) {
        const ssize_t n = ::recv(fd_, chunk, sizeof chunk, 0);
        if (n > 0) {
            pending_.insert(pending_.end(), chunk, chunk + n);
            continue;
        }
        if (n == 0) {
            extract();
            if (frames.empty()) {
                throw LinkError("peer closed the connection");
            }
            return frames;
        }
        if (errno == EAGAIN || errno == EWOULDBLOCK) {
            break;
        }
        if (errno != EINTR) {
            throw LinkError(last_error("recv"));
        }
    }
    extract();
    return frames;
}

Listener::Listener(std::uint16_t port)
{
    fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
    if (fd_ < 0) {
        throw LinkError(last_error("socket"));
    }
    const int one = 1;
    ::setsockopt(fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
    addr.sin_port = htons(port);
    if (::bind(fd_, reinterpret_cast<sockaddr*>(&addr), sizeof addr) < 0 || ::listen(fd_, 64) < 0) {
        const std::string err = last_error("bind/listen");
        close();
        throw LinkError(err);
    }
    socklen_t len = sizeof addr;
    ::getsockname(fd_, reinterpret_cast<sockaddr*>(&addr), &len);
    port_ = ntohs(addr.sin_port);
    set_nonblocking(fd_);
}

Listener::~Listener()
{
    close();
}

void Listener::close() noexcept
{
    if (fd_ >= 0) {
        ::close(fd_);
        fd_ = -1;
    }
}

std::optional<Connection> Listener::accept(std::chrono::milliseconds timeout)
{
    if (fd_ < 0 || wait_for(fd_, POLLIN, timeout) == 0) {
        return std::nullopt;
    }
    const int fd = ::accept(fd_, nullptr, nullptr);
    if (fd < 0) {
        return std::nullopt;
    }
    return Connection{fd};
}

std::optional<Connection> connect_local(std::uint16_t port, std::chrono::milliseconds timeout)
{
    const int fd = ::socket(AF_INET, SOCK_STREAM, 0);
    if (fd < 0) {
        throw LinkError(last_error("socket"));
    }
    set_nonblocking(fd);
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
    addr.sin_port = htons(port);
    if (::connect(fd, reinterpret_cast<sockaddr*>(&addr), sizeof addr) == 0) {
        return Connection{fd};
    }
    if (errno != EINPROGRESS) {
        ::close(fd);
        return std::nullopt;
    }
    if ((wait_for(fd, POLLOUT, timeout) & POLLOUT) == 0) {
        ::close(fd);
        return std::nullopt;
    }
    int err = 0;
    socklen_t len = sizeof err;
    ::getsockopt(fd, SOL_SOCKET, SO_ERROR, &err, &len);
    if (err != 0) {
        ::close(fd);
        return std::nullopt;
    }
    return Connection{fd};
}

}  // namespace cmarl::net
