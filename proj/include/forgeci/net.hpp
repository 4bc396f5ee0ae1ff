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


// Blocking TCP plumbing for the agent protocol.

#ifndef FORGECI_NET_HPP_
#define FORGECI_NET_HPP_

#include <atomic>
#include <cstdint>
#include <mutex>
#include <optional>
#include <string>

#include "forgeci/protocol.hpp"

namespace forgeci::net {

class Socket {
 public:
  Socket() = default;
  explicit Socket(int fd) : fd_(fd) {}
  ~Socket();
  Socket(Socket&& other) noexcept : fd_(other.release()) {}
  Socket& operator=(Socket&& other) noexcept;
  Socket(const Socket&) = delete;
  Socket& operator=(const Socket&) = delete;

  int fd() const { return fd_; }
  bool valid() const { return fd_ >= 0; }
  int release();
  // Wakes up any thread blocked on the socket; the descriptor stays open.
  void shutdown();

 private:
  int fd_ = -1;
};

// Throws Error{ConnectionFailed}.
Socket connect_tcp(const std::string& host, std::uint16_t port);

class Listener {
 public:
  // Port 0 picks a free port. Throws Error{ConnectionFailed}.
  Listener(const std::string& bind, std::uint16_t port);

  std::uint16_t port() const { return port_; }
  // Blocks; returns an invalid socket once close() was called.
  Socket accept();
  void close();

 private:
  Socket socket_;
  std::uint16_t port_ = 0;
  std::atomic<bool> closed_{false};
};

// One framed, sequenced protocol connection. send() may be called from any
// thread; receive() from one reader thread.
class Connection {
 public:
  explicit Connection(Socket socket);

  std::uint64_t id() const { return id_; }
  // Throws Error{ConnectionFailed}.
  void send(protocol::MessageKind kind, const nlohmann::json& body);
  // nullopt at end of stream. Throws Error{ConnectionFailed} and protocol
  // errors (MalformedFrame, UnknownKind, SeqRegression, SeqGap).
  std::optional<protocol::WireMessage> receive();
  void shutdown() { socket_.shutdown(); }

 private:
  Socket socket_;
  std::uint64_t id_;
  std::mutex send_mu_;
  protocol::SeqCounter out_seq_;
  protocol::SeqTracker in_seq_;
  protocol::FrameReader reader_;
};

}  // namespace forgeci::net

#endif  // FORGECI_NET_HPP_
