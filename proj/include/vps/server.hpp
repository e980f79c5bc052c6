#pragma once

#include <arpa/inet.h>
#include <netinet/in.h>
#include <sys/socket.h>
#include <unistd.h>

#include <atomic>
#include <cstring>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "vps/auth.hpp"
#include "vps/wire.hpp"

namespace vps {

// Blocking line-oriented TCP server, one thread per connection. Store
// mutations are serialized inside AuthService.
class TcpServer {
 public:
  TcpServer(AuthService& auth, const std::string& host, int port)
      : auth_(auth) {
    listen_fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
    if (listen_fd_ < 0) throw std::runtime_error("socket() failed");
    int one = 1;
    ::setsockopt(listen_fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_port = htons(static_cast<uint16_t>(port));
    if (::inet_pton(AF_INET, host.c_str(), &addr.sin_addr) != 1) {
      ::close(listen_fd_);
      throw std::runtime_error("bad listen address: " + host);
    }
    if (::bind(listen_fd_, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) <
        0) {
      ::close(listen_fd_);
      throw std::runtime_error("cannot bind " + host + ":" +
                               std::to_string(port));
    }
    if (::listen(listen_fd_, 16) < 0) {
      ::close(listen_fd_);
      throw std::runtime_error("listen() failed");
    }
  }

  ~TcpServer() { stop(); }

  // Port actually bound (useful with port 0 in tests).
  int port() const {
    sockaddr_in addr{};
    socklen_t len = sizeof(addr);
    ::getsockname(listen_fd_, reinterpret_cast<sockaddr*>(&addr), &len);
    return ntohs(addr.sin_port);
  }

  // Accept loop; blocks until stop() closes the listening socket.
  void run() {
    while (!stopping_) {
      int fd = ::accept(listen_fd_, nullptr, nullptr);
      if (fd < 0) {
        if (stopping_) break;
        continue;
      }
      workers_.emplace_back([this, fd] { serve_connection(fd); });
    }
    for (auto& t : workers_) {
      if (t.joinable()) t.join();
    }
  }

  void run_in_background() {
    accept_thread_ = std::thread([this] { run(); });
  }

  void stop() {
    if (stopping_.exchange(true)) return;
    if (listen_fd_ >= 0) {
      ::shutdown(listen_fd_, SHUT_RDWR);
      ::close(listen_fd_);
      listen_fd_ = -1;
    }
    if (accept_thread_.joinable()) accept_thread_.join();
  }

 private:
  void serve_connection(int fd) {
    WireHandler handler(auth_);
    WireConnection conn;
    std::string buffer;
    char chunk[4096];
    while (!conn.close) {
      ssize_t got = ::recv(fd, chunk, sizeof(chunk), 0);
      if (got <= 0) break;
      buffer.append(chunk, static_cast<std::size_t>(got));
      std::size_t nl;
      while (!conn.close && (nl = buffer.find('\n')) != std::string::npos) {
        std::string line = buffer.substr(0, nl);
        if (!line.empty() && line.back() == '\r') line.pop_back();
        buffer.erase(0, nl + 1);
        for (const auto& reply : handler.handle_line(conn, line)) {
          std::string out = reply + "\n";
          if (::send(fd, out.data(), out.size(), MSG_NOSIGNAL) < 0) {
            conn.close = true;
            break;
          }
        }
      }
    }
    ::close(fd);
  }

  AuthService& auth_;
  int listen_fd_ = -1;
  std::atomic<bool> stopping_{false};
  std::vector<std::thread> workers_;
  std::thread accept_thread_;
};

}  // namespace vps
