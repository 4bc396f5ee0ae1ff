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

#include "forgeci/process.hpp"

#include <fcntl.h>
#include <signal.h>
#include <spawn.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <fstream>
#include <sstream>

#include "forgeci/error.hpp"

extern char** environ;

namespace forgeci::process {

namespace fs = std::filesystem;

ProcessHandle::ProcessHandle(pid_t pid, bool own_group) : pid_(pid), own_group_(own_group) {
  waiter_ = std::thread([this] { reap(); });
}

ProcessHandle::~ProcessHandle() {
  if (waiter_.joinable()) waiter_.join();
}

void ProcessHandle::reap() {
  int status = 0;
  pid_t r;
  do {
    r = ::waitpid(pid_, &status, 0);
  } while (r < 0 && errno == EINTR);
  int code = 1;
  if (r == pid_) {
    if (WIFEXITED(status)) {
      code = WEXITSTATUS(status);
    } else if (WIFSIGNALED(status)) {
      code = 128 + WTERMSIG(status);
    }
  }
  {
    std::lock_guard lock(mu_);
    exit_code_ = code;
  }
  cv_.notify_all();
}

std::shared_ptr<ProcessHandle> ProcessHandle::adopt(pid_t pid) {
  return std::shared_ptr<ProcessHandle>(new ProcessHandle(pid, false));
}

std::shared_ptr<ProcessHandle> ProcessHandle::spawn(const SpawnOptions& options) {
  if (options.argv.empty()) throw Error(Errc::SpawnFailed, "empty argv");

  posix_spawn_file_actions_t actions;
  posix_spawn_file_actions_init(&actions);
  posix_spawnattr_t attr;
  posix_spawnattr_init(&attr);
  struct Cleanup {
    posix_spawn_file_actions_t* a;
    posix_spawnattr_t* t;
    ~Cleanup() {
      posix_spawn_file_actions_destroy(a);
      posix_spawnattr_destroy(t);
    }
  } cleanup{&actions, &attr};

  short flags = POSIX_SPAWN_SETSIGMASK | POSIX_SPAWN_SETSIGDEF;
  if (options.new_session) flags |= POSIX_SPAWN_SETSID;
  posix_spawnattr_setflags(&attr, flags);
  sigset_t empty_mask;
  sigemptyset(&empty_mask);
  posix_spawnattr_setsigmask(&attr, &empty_mask);
  sigset_t defaults;
  sigemptyset(&defaults);
  sigaddset(&defaults, SIGPIPE);
  sigaddset(&defaults, SIGTERM);
  sigaddset(&defaults, SIGINT);
  posix_spawnattr_setsigdefault(&attr, &defaults);

  const std::string cwd = options.cwd.string();
  if (!cwd.empty()) posix_spawn_file_actions_addchdir_np(&actions, cwd.c_str());
  posix_spawn_file_actions_addopen(&actions, STDIN_FILENO, "/dev/null", O_RDONLY, 0);
  const std::string out = options.output.string();
  if (!out.empty()) {
    posix_spawn_file_actions_addopen(&actions, STDOUT_FILENO, out.c_str(),
                                     O_WRONLY | O_CREAT | O_TRUNC, 0644);
    posix_spawn_file_actions_adddup2(&actions, STDOUT_FILENO, STDERR_FILENO);
  }

  std::vector<char*> argv;
  for (const auto& a : options.argv) argv.push_back(const_cast<char*>(a.c_str()));
  argv.push_back(nullptr);
  std::vector<std::string> env_storage;
  for (const auto& [k, v] : options.env) env_storage.push_back(k + "=" + v);
  std::vector<char*> envp;
  for (auto& e : env_storage) envp.push_back(e.data());
  envp.push_back(nullptr);

  pid_t pid = 0;
  const int rc = ::posix_spawnp(&pid, argv[0], &actions, &attr, argv.data(), envp.data());
  if (rc != 0) {
    throw Error(Errc::SpawnFailed, options.argv[0] + ": " + std::strerror(rc));
  }
  return std::shared_ptr<ProcessHandle>(new ProcessHandle(pid, options.new_session));
}

bool ProcessHandle::exited() const {
  std::lock_guard lock(mu_);
  return exit_code_.has_value();
}

std::optional<int> ProcessHandle::exit_code() const {
  std::lock_guard lock(mu_);
  return exit_code_;
}

int ProcessHandle::wait() const {
  std::unique_lock lock(mu_);
  cv_.wait(lock, [&] { return exit_code_.has_value(); });
  return *exit_code_;
}

bool ProcessHandle::wait_for(std::chrono::milliseconds timeout) const {
  std::unique_lock lock(mu_);
  return cv_.wait_for(lock, timeout, [&] { return exit_code_.has_value(); });
}

void ProcessHandle::kill(int signal) const {
  if (exited()) return;
  if (own_group_) {
    ::kill(-pid_, signal);
  } else {
    ::kill(pid_, signal);
  }
}

std::map<std::string, std::string> current_environment() {
  std::map<std::string, std::string> env;
  for (char** e = environ; e && *e; ++e) {
    std::string_view kv(*e);
    const auto eq = kv.find('=');
    if (eq == std::string_view::npos) continue;
    env.emplace(std::string(kv.substr(0, eq)), std::string(kv.substr(eq + 1)));
  }
  return env;
}

CommandResult run_capture(const std::vector<std::string>& argv, const fs::path& cwd) {
  char tmpl[] = "/tmp/forgeci-capture-XXXXXX";
  const int fd = ::mkstemp(tmpl);
  if (fd < 0) throw Error(Errc::SpawnFailed, "mkstemp failed");
  ::close(fd);
  const fs::path capture(tmpl);

  SpawnOptions opts;
  opts.argv = argv;
  opts.env = current_environment();
  opts.cwd = cwd;
  opts.output = capture;
  opts.new_session = false;
  CommandResult result;
  try {
    result.exit_code = ProcessHandle::spawn(opts)->wait();
  } catch (...) {
    std::error_code ec;
    fs::remove(capture, ec);
    throw;
  }
  std::ifstream in(capture, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  result.output = ss.str();
  std::error_code ec;
  fs::remove(capture, ec);
  return result;
}

}  // namespace forgeci::process
