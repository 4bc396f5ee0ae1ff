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

// Child processes with a dedicated waiter thread, so callers can poll for
// exit while doing other work (following the child's log file).

#ifndef FORGECI_PROCESS_HPP_
#define FORGECI_PROCESS_HPP_

#include <sys/types.h>

#include <chrono>
#include <condition_variable>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

namespace forgeci::process {

struct SpawnOptions {
  std::vector<std::string> argv;
  // Full child environment. Empty map means an empty environment.
  std::map<std::string, std::string> env;
  std::filesystem::path cwd;
  // stdout and stderr both go here (truncated). Empty: inherit.
  std::filesystem::path output;
  // Start the child in its own session so the whole tree can be signalled.
  bool new_session = true;
};

class ProcessHandle {
 public:
  // Throws Error{SpawnFailed}.
  static std::shared_ptr<ProcessHandle> spawn(const SpawnOptions& options);
  // Takes ownership of an already forked child of this process.
  static std::shared_ptr<ProcessHandle> adopt(pid_t pid);

  ~ProcessHandle();
  ProcessHandle(const ProcessHandle&) = delete;
  ProcessHandle& operator=(const ProcessHandle&) = delete;

  pid_t pid() const { return pid_; }
  bool exited() const;
  // Exit status, or 128 + signal number for a signalled child.
  std::optional<int> exit_code() const;
  int wait() const;
  bool wait_for(std::chrono::milliseconds timeout) const;
  // Signals the child's process group (or just the child).
  void kill(int signal) const;

 private:
  explicit ProcessHandle(pid_t pid, bool own_group);
  void reap();

  pid_t pid_;
  bool own_group_;
  mutable std::mutex mu_;
  mutable std::condition_variable cv_;
  std::optional<int> exit_code_;
  std::thread waiter_;
};

// The current environment as a map.
std::map<std::string, std::string> current_environment();

struct CommandResult {
  int exit_code = 0;
  std::string output;  // stdout + stderr
};

// Runs to completion, capturing combined output. Throws Error{SpawnFailed}.
CommandResult run_capture(const std::vector<std::string>& argv,
                          const std::filesystem::path& cwd = {});

}  // namespace forgeci::process

#endif  // FORGECI_PROCESS_HPP_
