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


#include "forgeci/agent_client.hpp"

#include <signal.h>

#include <deque>
#include <iostream>

#include "forgeci/error.hpp"

namespace forgeci::agent {

namespace {

// Chunks between the log follower and the network sender. The follower
// blocks once kChunkWindow chunks are in flight.
class ChunkQueue {
 public:
  void push(std::string chunk) {
    std::unique_lock lock(mu_);
    cv_.wait(lock, [&] { return items_.size() < protocol::kChunkWindow; });
    items_.push_back(std::move(chunk));
    cv_.notify_all();
  }
  std::optional<std::string> pop() {
    std::unique_lock lock(mu_);
    cv_.wait(lock, [&] { return !items_.empty() || closed_; });
    if (items_.empty()) return std::nullopt;
    std::string chunk = std::move(items_.front());
    items_.pop_front();
    cv_.notify_all();
    return chunk;
  }
  void close() {
    std::lock_guard lock(mu_);
    closed_ = true;
    cv_.notify_all();
  }

 private:
  std::mutex mu_;
  std::condition_variable cv_;
  std::deque<std::string> items_;
  bool closed_ = false;
};

void try_send(const std::shared_ptr<net::Connection>& conn, protocol::MessageKind kind,
              const nlohmann::json& body) {
  try {
    conn->send(kind, body);
  } catch (const Error&) {
    conn->shutdown();
  }
}

}  // namespace

std::unique_ptr<WorkspaceFetcher> make_fetcher(const config::AgentConfig& config) {
  if (!config.source_dir.empty()) return std::make_unique<LocalDirectoryFetcher>(config.source_dir);
  return std::make_unique<GitFetcher>(config.repo_url);
}

AgentClient::AgentClient(config::AgentConfig config, std::unique_ptr<WorkspaceFetcher> fetcher)
    : config_(std::move(config)), fetcher_(std::move(fetcher)) {}

AgentClient::~AgentClient() {
  stop();
  join_build();
}

void AgentClient::stop() {
  stopping_ = true;
  {
    std::lock_guard lock(mu_);
    if (current_) current_->shutdown();
    cv_.notify_all();
  }
  cancel_build();
}

void AgentClient::run() {
  while (!stopping_) {
    std::shared_ptr<net::Connection> conn;
    try {
      conn = std::make_shared<net::Connection>(net::connect_tcp(config_.master_host, config_.master_port));
    } catch (const Error&) {
      std::unique_lock lock(mu_);
      cv_.wait_for(lock, config_.reconnect_delay, [&] { return stopping_.load(); });
      continue;
    }
    {
      std::lock_guard lock(mu_);
      if (stopping_) break;
      current_ = conn;
    }
    std::exception_ptr fatal;
    try {
      serve(conn);
    } catch (const Error& e) {
      if (e.code() == Errc::VersionMismatch || e.code() == Errc::UnknownPlatform ||
          e.code() == Errc::DuplicateAgentName) {
        fatal = std::current_exception();
      } else {
        std::cerr << "forgeci agent: connection lost: " << e.what() << '\n';
      }
    }
    connected_ = false;
    conn->shutdown();
    cancel_build();
    join_build();
    {
      std::lock_guard lock(mu_);
      current_.reset();
    }
    if (fatal) std::rethrow_exception(fatal);
    std::unique_lock lock(mu_);
    cv_.wait_for(lock, config_.reconnect_delay, [&] { return stopping_.load(); });
  }
}

void AgentClient::serve(const std::shared_ptr<net::Connection>& conn) {
  protocol::AgentHello hello;
  hello.agent_name = config_.agent_name;
  hello.platform = config_.platform;
  hello.cores = config_.cores > 0 ? config_.cores : static_cast<int>(std::thread::hardware_concurrency());
  hello.memory_mb = config_.memory_mb;
  hello.os_descriptor = config_.os_descriptor;
  conn->send(protocol::MessageKind::kHello, protocol::to_json(hello));

  auto first = conn->receive();
  if (!first) throw Error(Errc::ConnectionFailed, "master closed the connection during handshake");
  if (first->kind == protocol::MessageKind::kError) {
    const auto body = protocol::error_from_json(first->body);
    throw Error(parse_errc(body.error).value_or(Errc::ConnectionFailed), body.detail);
  }
  if (first->kind != protocol::MessageKind::kHelloAck) {
    throw Error(Errc::MalformedFrame, "expected HELLO_ACK");
  }
  const protocol::HelloAck ack = protocol::ack_from_json(first->body);
  connected_ = true;

  std::mutex hb_mu;
  std::condition_variable hb_cv;
  bool hb_stop = false;
  std::thread heartbeat([&] {
    std::unique_lock lock(hb_mu);
    while (!hb_cv.wait_for(lock, std::chrono::milliseconds(ack.heartbeat_interval_ms),
                           [&] { return hb_stop; })) {
      lock.unlock();
      try_send(conn, protocol::MessageKind::kHeartbeat, nlohmann::json::object());
      lock.lock();
    }
  });
  struct Joiner {
    std::function<void()> fn;
    ~Joiner() { fn(); }
  } joiner{[&] {
    {
      std::lock_guard lock(hb_mu);
      hb_stop = true;
    }
    hb_cv.notify_all();
    heartbeat.join();
  }};

  while (auto msg = conn->receive()) {
    switch (msg->kind) {
      case protocol::MessageKind::kAssign:
        start_build(conn, protocol::assignment_from_json(msg->body));
        break;
      case protocol::MessageKind::kCancel:
        cancel_build();
        break;
      case protocol::MessageKind::kError: {
        const auto body = protocol::error_from_json(msg->body);
        std::cerr << "forgeci agent: master reported " << body.error << ": " << body.detail << '\n';
        break;
      }
      default:
        break;
    }
  }
}

void AgentClient::start_build(const std::shared_ptr<net::Connection>& conn, protocol::Assignment a) {
  if (build_active_) {
    try_send(conn, protocol::MessageKind::kError,
             protocol::to_json(protocol::ErrorBody{"Busy", "agent already runs a build"}));
    return;
  }
  join_build();
  build_active_ = true;
  build_thread_ = std::thread([this, conn, a = std::move(a)] { execute(conn, a); });
}

void AgentClient::execute(const std::shared_ptr<net::Connection>& conn, const protocol::Assignment& a) {
  try_send(conn, protocol::MessageKind::kAccept, {{"build_id", a.build_id}});

  ChunkQueue queue;
  std::uint64_t bytes = 0, chunks = 0;
  std::thread sender([&] {
    std::uint64_t index = 0;
    while (auto chunk = queue.pop()) {
      try_send(conn, protocol::MessageKind::kLogChunk,
               protocol::to_json(protocol::LogChunk{a.build_id, index++, std::move(*chunk)}));
    }
  });
  auto emit = [&](std::string_view data) {
    for (std::string_view part : protocol::chunk_payloads(data)) {
      bytes += part.size();
      ++chunks;
      queue.push(std::string(part));
    }
  };

  RunOptions opts;
  opts.workspace_root = config_.workspace_root;
  opts.install_dir = config_.install_dir;
  opts.unset_vars = config_.unset_vars;
  opts.follow.poll_interval = config_.poll_interval;
  opts.on_chunk = emit;
  opts.on_spawn = [this](std::shared_ptr<process::ProcessHandle> h) {
    std::lock_guard lock(mu_);
    child_ = std::move(h);
    if (cancel_requested_) child_->kill(SIGKILL);
  };

  protocol::BuildResult result;
  result.build_id = a.build_id;
  try {
    const BuildOutcome outcome = run_build(a, *fetcher_, opts);
    result.exit_code = outcome.exit_code;
    if (outcome.cleanup_error) std::cerr << "forgeci agent: " << *outcome.cleanup_error << '\n';
  } catch (const Error& e) {
    result.exit_code = 1;
    result.cause = std::string(e.name());
    emit("forgeci agent: " + std::string(e.what()) + "\n");
  }
  queue.close();
  sender.join();
  result.log_bytes = bytes;
  result.chunk_count = chunks;
  {
    // Free the slot first: the master may assign the next build as soon as
    // it sees the result.
    std::lock_guard lock(mu_);
    child_.reset();
    cancel_requested_ = false;
    ++builds_run_;
    build_active_ = false;
  }
  try_send(conn, protocol::MessageKind::kResult, protocol::to_json(result));
}

void AgentClient::cancel_build() {
  std::lock_guard lock(mu_);
  if (!build_active_) return;
  cancel_requested_ = true;
  if (child_) child_->kill(SIGKILL);
}

void AgentClient::join_build() {
  if (build_thread_.joinable()) build_thread_.join();
}

}  // namespace forgeci::agent
