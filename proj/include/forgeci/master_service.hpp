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


// The running master: one strand thread owns the Scheduler, agent
// connections and HTTP requests post work to it, and a timer drives
// heartbeat checks and the nightly maintenance reload.
//
// HTTP API:
//   POST /webhook                              X-Event-Kind, X-Delivery-Id, X-Signature
//   POST /api/jobs/{name}/trigger              {"sha": "..."}, X-Actor
//   GET  /api/jobs
//   GET  /api/jobs/{name}/trend
//   GET  /api/builds/{id}
//   POST /api/builds/{id}/relaunch             X-Actor
//   POST /api/builds/{id}/abort
//   GET  /api/groups/{event_id}
//   GET  /api/status/{sha}
//   POST /api/status/{sha}/override            {"context", "state"}, X-Actor
//   GET  /api/agents
//   GET  /job/{job}/{number}/{version}/{platform}/console?offset=N
//   GET  /badges/{platform}.svg
//   GET  /ui/...                               static files from ui_dir

#ifndef FORGECI_MASTER_SERVICE_HPP_
#define FORGECI_MASTER_SERVICE_HPP_

#include <atomic>
#include <condition_variable>
#include <deque>
#include <fstream>
#include <functional>
#include <future>
#include <list>
#include <memory>
#include <mutex>
#include <thread>
#include <type_traits>

#include "forgeci/config.hpp"
#include "forgeci/net.hpp"
#include "forgeci/scheduler.hpp"
#include "forgeci/status.hpp"
#include "forgeci/store.hpp"

namespace httplib {
class Server;
}

namespace forgeci::master {

// Runs posted tasks one at a time on its own thread.
class Strand {
 public:
  Strand();
  ~Strand();
  void post(std::function<void()> task);
  void stop();

 private:
  std::mutex mu_;
  std::condition_variable cv_;
  std::deque<std::function<void()>> tasks_;
  bool stopping_ = false;
  std::thread worker_;
};

struct MasterOptions {
  config::MasterConfig config;
  // Re-read by the maintenance reload; empty keeps the current config.
  std::filesystem::path config_path;
  // Defaults: FileStatusClient on status_file, else in memory.
  std::shared_ptr<status::VcsStatusClient> vcs;
  // Defaults: JSON lines to notify_file, else stderr.
  std::shared_ptr<status::NotificationSink> notify;
  std::chrono::milliseconds tick{1000};
  status::RetryPolicy retry;
};

class MasterService {
 public:
  explicit MasterService(MasterOptions options);
  ~MasterService();
  MasterService(const MasterService&) = delete;
  MasterService& operator=(const MasterService&) = delete;

  // Binds both ports (0 picks a free one), restores persisted state and
  // starts serving. Throws Error{ConnectionFailed, IoError}.
  void start();
  void stop();
  // Blocks until stop().
  void wait();

  std::uint16_t agent_port() const { return agent_port_; }
  std::uint16_t http_port() const { return http_port_; }
  status::VcsStatusClient& vcs() { return *vcs_; }
  BuildStore& store() { return *store_; }

  // Runs `fn` on the strand against the scheduler and returns its result;
  // exceptions propagate to the caller.
  template <typename Fn>
  auto call(Fn&& fn) -> std::invoke_result_t<Fn&, Scheduler&> {
    using R = std::invoke_result_t<Fn&, Scheduler&>;
    auto task = std::make_shared<std::packaged_task<R()>>(
        [this, &fn]() -> R { return fn(*scheduler_); });
    auto result = task->get_future();
    strand_.post([task] { (*task)(); });
    return result.get();
  }

 private:
  void accept_loop();
  void serve_connection(std::shared_ptr<net::Connection> conn);
  void timer_loop();
  void install_routes();
  std::string resolve_sha(std::string_view abbreviated);

  MasterOptions options_;
  std::shared_ptr<status::VcsStatusClient> vcs_;
  std::shared_ptr<status::NotificationSink> notify_;
  std::ofstream notify_file_;
  std::unique_ptr<BuildStore> store_;
  std::unique_ptr<Scheduler> scheduler_;
  Strand strand_;

  std::unique_ptr<net::Listener> listener_;
  std::unique_ptr<httplib::Server> http_;
  std::uint16_t agent_port_ = 0;
  std::uint16_t http_port_ = 0;

  std::atomic<bool> running_{false};
  std::atomic<bool> stopping_{false};
  std::thread accept_thread_;
  std::thread http_thread_;
  std::thread timer_thread_;
  std::mutex mu_;
  std::condition_variable cv_;
  std::list<std::shared_ptr<net::Connection>> connections_;
  std::list<std::thread> connection_threads_;
};

}  // namespace forgeci::master

#endif  // FORGECI_MASTER_SERVICE_HPP_
