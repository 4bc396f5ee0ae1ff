// Copyright 2026 The forgeci Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


#include "forgeci/net.hpp"

#include <arpa/inet.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>

#include "forgeci/error.hpp"

namespace forgeci::net {

namespace {

[[noreturn]] void fail(const std::string& what) {
  throw Error(Errc::ConnectionFailed, what + ": " + std::strerror(errno));
}

std::atomic<std::uint64_t> g_next_connection_id{1};

}  // namespace

Socket::~Socket() {
  if (fd_ >= 0) ::close(fd_);
}

Socket& Socket::operator=(Socket&& other) noexcept {
  if (this != &other) {
    if (fd_ >= 0) ::close(fd_);
    fd_ = other.release();
  }
  return *this;
}

int Socket::release() {
  const int fd = fd_;
  fd_ = -1;
  return fd;
}

void Socket::shutdown() {
  if (fd_ >= 0) ::shutdown(fd_, SHUT_RDWR);
}

Socket connect_tcp(const std::string& host, std::uint16_t port) {
  addrinfo hints{};
  hints.ai_family = AF_UNSPEC;
  hints.ai_socktype = SOCK_STREAM;
  addrinfo* res = nullptr;
  const std::string service = std::to_string(port);
  if (const int rc = ::getaddrinfo(host.c_str(), service.c_str(), &hints, &res); rc != 0) {
    throw Error(Errc::ConnectionFailed, host + ": " + ::gai_strerror(rc));
  }
  std::string last_error = "no address";
  for (addrinfo* ai = res; ai; ai = ai->ai_next) {
    Socket s(::socket(ai->ai_family, ai->ai_socktype | SOCK_CLOEXEC, ai->ai_protocol));
    if (!s.valid()) continue;
    if (::connect(s.fd(), ai->ai_addr, ai->ai_addrlen) == 0) {
      ::freeaddrinfo(res);
      const int one = 1;
      ::setsockopt(s.fd(), IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
      return s;
    }
    last_error = std::strerror(errno);
  }
  ::freeaddrinfo(res);
  throw Error(Errc::ConnectionFailed, host + ":" + service + ": " + last_error);
}

Listener::Listener(const std::string& bind, std::uint16_t port) {
  socket_ = Socket(::socket(AF_INET, SOCK_STREAM | SOCK_CLOEXEC, 0));
  if (!socket_.valid()) fail("socket");
  const int one = 1;
  ::setsockopt(socket_.fd(), SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(port);
  if (::inet_pton(AF_INET, bind.c_str(), &addr.sin_addr) != 1) {
    throw Error(Errc::ConnectionFailed, "bad bind address " + bind);
  }
  if (::bind(socket_.fd(), reinterpret_cast<sockaddr*>(&addr), sizeof addr) != 0) {
    fail("bind " + bind + ":" + std::to_string(port));
  }
  if (::listen(socket_.fd(), 64) != 0) fail("listen");
  socklen_t len = sizeof addr;
  ::getsockname(socket_.fd(), reinterpret_cast<sockaddr*>(&addr), &len);
  port_ = ntohs(addr.sin_port);
}

Socket Listener::accept() {
  while (!closed_) {
    const int fd = ::accept4(socket_.fd(), nullptr, nullptr, SOCK_CLOEXEC);
    if (fd >= 0) {
      if (closed_) {
        ::close(fd);
        break;
      }
      const int one = 1;
      ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
      return Socket(fd);
    }
    if (errno == EINTR || errno == ECONNABORTED) continue;
    if (closed_) break;
    fail("accept");
  }
  return Socket();
}

void Listener::close() {
  closed_ = true;
  socket_.shutdown();
}

Connection::Connection(Socket socket)
    : socket_(std::move(socket)), id_(g_next_connection_id++) {}

void Connection::send(protocol::MessageKind kind, const nlohmann::json& body) {
  std::lock_guard lock(send_mu_);
  const std::string frame = protocol::encode({kind, out_seq_.next(), body});
  std::size_t off = 0;
  while (off < frame.size()) {
    const ssize_t n = ::send(socket_.fd(), frame.data() + off, frame.size() - off, MSG_NOSIGNAL);
    if (n < 0) {
      if (errno == EINTR) continue;
      fail("send");
    }
    off += static_cast<std::size_t>(n);
  }
}

std::optional<protocol::WireMessage> Connection::receive() {
  char buf[64 * 1024];
  while (true) {
    if (auto frame = reader_.next_frame()) {
      protocol::WireMessage msg = protocol::decode(*frame);
      in_seq_.observe(msg.seq);
      return msg;
    }
    const ssize_t n = ::recv(socket_.fd(), buf, sizeof buf, 0);
    if (n == 0) return std::nullopt;
    if (n < 0) {
      if (errno == EINTR) continue;
      if (errno == ECONNRESET || errno == EBADF || errno == ENOTCONN) return std::nullopt;
      fail("recv");
    }
    reader_.feed(std::string_view(buf, static_cast<std::size_t>(n)));
  }
}

}  // namespace forgeci::net
