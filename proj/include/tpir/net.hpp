#pragma once

#include <arpa/inet.h>
#include <netdb.h>
#include <netinet/in.h>
#include <sys/socket.h>
#include <unistd.h>

#include <atomic>
#include <cstring>
#include <memory>
#include <mutex>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "tpir/wire.hpp"

namespace tpir {

// Transport framing: every message is preceded by a u32 little-endian
// payload length. A connection carries one query in and one answer out.

inline constexpr std::size_t kMaxFrame = std::size_t(1) << 30;

namespace detail {

inline void write_all(int fd, const std::uint8_t* p, std::size_t n) {
  while (n > 0) {
    const ssize_t w = ::write(fd, p, n);
    if (w <= 0) throw std::runtime_error("socket write failed");
    p += w;
    n -= static_cast<std::size_t>(w);
  }
}

inline bool read_all(int fd, std::uint8_t* p, std::size_t n) {
  while (n > 0) {
    const ssize_t r = ::read(fd, p, n);
    if (r == 0) return false;  // peer closed
    if (r < 0) throw std::runtime_error("socket read failed");
    p += r;
    n -= static_cast<std::size_t>(r);
  }
  return true;
}

}  // namespace detail

inline void send_frame(int fd, const Bytes& payload) {
  std::uint8_t len[4];
  const std::uint32_t n = static_cast<std::uint32_t>(payload.size());
  for (int i = 0; i < 4; ++i) len[i] = static_cast<std::uint8_t>(n >> (8 * i));
  detail::write_all(fd, len, 4);
  detail::write_all(fd, payload.data(), payload.size());
}

inline bool recv_frame(int fd, Bytes& out) {
  std::uint8_t len[4];
  if (!detail::read_all(fd, len, 4)) return false;
  std::uint32_t n = 0;
  for (int i = 0; i < 4; ++i) n |= std::uint32_t(len[i]) << (8 * i);
  if (n > kMaxFrame) throw std::runtime_error("frame too large");
  out.resize(n);
  if (n > 0 && !detail::read_all(fd, out.data(), n)) throw std::runtime_error("truncated frame");
  return true;
}

class FdGuard {
 public:
  explicit FdGuard(int fd) : fd_(fd) {}
  ~FdGuard() {
    if (fd_ >= 0) ::close(fd_);
  }
  FdGuard(const FdGuard&) = delete;
  FdGuard& operator=(const FdGuard&) = delete;
  int get() const { return fd_; }
  int release() {
    int f = fd_;
    fd_ = -1;
    return f;
  }

 private:
  int fd_;
};

/// A listening answer server over one replicated database. Each accepted
/// connection is handled on its own thread: read one framed query, answer
/// it, close. stop() unblocks the accept loop and joins everything.
class Server {
 public:
  Server(RecordSet db, std::uint16_t port) : db_(std::move(db)) {
    listen_fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
    if (listen_fd_ < 0) throw std::runtime_error("socket() failed");
    const int one = 1;
    ::setsockopt(listen_fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_addr.s_addr = htonl(INADDR_ANY);
    addr.sin_port = htons(port);
    if (::bind(listen_fd_, reinterpret_cast<sockaddr*>(&addr), sizeof addr) != 0) {
      ::close(listen_fd_);
      throw std::runtime_error("bind to port " + std::to_string(port) + " failed");
    }
    socklen_t len = sizeof addr;
    ::getsockname(listen_fd_, reinterpret_cast<sockaddr*>(&addr), &len);
    port_ = ntohs(addr.sin_port);
    if (::listen(listen_fd_, 16) != 0) {
      ::close(listen_fd_);
      throw std::runtime_error("listen failed");
    }
    accept_thread_ = std::thread([this] { accept_loop(); });
  }

  ~Server() { stop(); }

  std::uint16_t port() const { return port_; }

  void stop() {
    bool expected = false;
    if (!stopping_.compare_exchange_strong(expected, true)) return;
    ::shutdown(listen_fd_, SHUT_RDWR);
    ::close(listen_fd_);
    if (accept_thread_.joinable()) accept_thread_.join();
    std::lock_guard<std::mutex> lk(mu_);
    for (auto& t : workers_)
      if (t.joinable()) t.join();
    workers_.clear();
  }

 private:
  void accept_loop() {
    for (;;) {
      const int conn = ::accept(listen_fd_, nullptr, nullptr);
      if (conn < 0) {
        if (stopping_) return;
        continue;
      }
      std::lock_guard<std::mutex> lk(mu_);
      workers_.emplace_back([this, conn] { handle(conn); });
    }
  }

  void handle(int conn) {
    FdGuard guard(conn);
    try {
      Bytes in;
      if (!recv_frame(conn, in)) return;
      const Query query = decode_query(in);
      const Answer ans = server_answer(query, db_);
      send_frame(conn, encode_answer(ans));
    } catch (const std::exception&) {
      // drop the connection; a malformed query is the client's problem
    }
  }

  RecordSet db_;
  int listen_fd_ = -1;
  std::uint16_t port_ = 0;
  std::atomic<bool> stopping_{false};
  std::thread accept_thread_;
  std::mutex mu_;
  std::vector<std::thread> workers_;
};

struct Endpoint {
  std::string host;
  std::uint16_t port = 0;
};

inline Endpoint parse_endpoint(const std::string& s) {
  const auto colon = s.rfind(':');
  if (colon == std::string::npos || colon + 1 >= s.size())
    throw std::invalid_argument("endpoint must be host:port, got '" + s + "'");
  const int port = std::stoi(s.substr(colon + 1));
  if (port <= 0 || port > 65535) throw std::invalid_argument("port out of range in '" + s + "'");
  return Endpoint{s.substr(0, colon), static_cast<std::uint16_t>(port)};
}

inline int connect_to(const Endpoint& ep) {
  addrinfo hints{};
  hints.ai_family = AF_INET;
  hints.ai_socktype = SOCK_STREAM;
  addrinfo* res = nullptr;
  if (::getaddrinfo(ep.host.c_str(), std::to_string(ep.port).c_str(), &hints, &res) != 0)
    throw std::runtime_error("cannot resolve " + ep.host);
  int fd = -1;
  for (addrinfo* ai = res; ai; ai = ai->ai_next) {
    fd = ::socket(ai->ai_family, ai->ai_socktype, ai->ai_protocol);
    if (fd < 0) continue;
    if (::connect(fd, ai->ai_addr, ai->ai_addrlen) == 0) break;
    ::close(fd);
    fd = -1;
  }
  ::freeaddrinfo(res);
  if (fd < 0)
    throw std::runtime_error("cannot connect to " + ep.host + ":" + std::to_string(ep.port));
  return fd;
}

/// Sends each query to its endpoint and collects the framed answers.
inline std::vector<Answer> remote_answers(const std::vector<Endpoint>& servers,
                                          const std::vector<Query>& queries) {
  if (servers.size() != queries.size())
    throw std::invalid_argument("need exactly one endpoint per server query");
  std::vector<Answer> out;
  out.reserve(queries.size());
  for (std::size_t j = 0; j < queries.size(); ++j) {
    FdGuard fd(connect_to(servers[j]));
    send_frame(fd.get(), encode_query(queries[j]));
    Bytes frame;
    if (!recv_frame(fd.get(), frame))
      throw std::runtime_error("server " + std::to_string(j) + " closed without answering");
    out.push_back(decode_answer(frame));
  }
  return out;
}

}  // namespace tpir
