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


// The long-running agent process: dials the master, announces itself, runs
// one assigned build at a time and streams its log back.

#ifndef FORGECI_AGENT_CLIENT_HPP_
#define FORGECI_AGENT_CLIENT_HPP_

#include <atomic>
#include <condition_variable>
#include <memory>
#include <mutex>
#include <thread>

#include "forgeci/agent.hpp"
#include "forgeci/config.hpp"
#include "forgeci/net.hpp"

namespace forgeci::agent {

class AgentClient {
 public:
  AgentClient(config::AgentConfig config, std::unique_ptr<WorkspaceFetcher> fetcher);
  ~AgentClient();

  // Connects and serves until stop(). Reconnects after connection loss.
  // Throws Error{VersionMismatch, UnknownPlatform} when the master rejects
  // the handshake.
  void run();
  void stop();

  bool connected() const { return connected_; }
  std::uint64_t builds_run() const { return builds_run_; }

 private:
  void serve(const std::shared_ptr<net::Connection>& conn);
  void start_build(const std::shared_ptr<net::Connection>& conn, protocol::Assignment a);
  void execute(const std::shared_ptr<net::Connection>& conn, const protocol::Assignment& a);
  void cancel_build();
  void join_build();

  config::AgentConfig config_;
  std::unique_ptr<WorkspaceFetcher> fetcher_;

  std::atomic<bool> stopping_{false};
  std::atomic<bool> connected_{false};
  std::atomic<std::uint64_t> builds_run_{0};

  std::mutex mu_;
  std::condition_variable cv_;
  std::shared_ptr<net::Connection> current_;
  std::thread build_thread_;
  std::atomic<bool> build_active_{false};
  std::shared_ptr<process::ProcessHandle> child_;
  bool cancel_requested_ = false;
};

// Local-directory copy when source_dir is set, git otherwise.
std::unique_ptr<WorkspaceFetcher> make_fetcher(const config::AgentConfig& config);

}  // namespace forgeci::agent

#endif  // FORGECI_AGENT_CLIENT_HPP_
