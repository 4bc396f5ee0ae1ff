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

#include "forgeci/agent.hpp"

#include <fcntl.h>
#include <signal.h>
#include <sys/stat.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <fstream>
#include <thread>

#include "forgeci/error.hpp"

namespace forgeci::agent {

namespace fs = std::filesystem;

namespace {

class FileDescriptor {
 public:
  explicit FileDescriptor(int fd) : fd_(fd) {}
  ~FileDescriptor() {
    if (fd_ >= 0) ::close(fd_);
  }
  FileDescriptor(const FileDescriptor&) = delete;
  FileDescriptor& operator=(const FileDescriptor&) = delete;
  int get() const { return fd_; }

 private:
  int fd_;
};

[[noreturn]] void vanished(const fs::path& path, std::string_view why) {
  throw Error(Errc::FileVanished, path.string() + ": " + std::string(why));
}

}  // namespace

std::uint64_t follow_log(const fs::path& path, const process::ProcessHandle& handle,
                         const ChunkSink& sink, const FollowOptions& options) {
  const auto deadline = std::chrono::steady_clock::now() + options.grace;
  int raw_fd;
  while ((raw_fd = ::open(path.c_str(), O_RDONLY | O_CLOEXEC)) < 0) {
    if (errno != ENOENT) vanished(path, std::strerror(errno));
    if (std::chrono::steady_clock::now() >= deadline) vanished(path, "never created");
    if (handle.exited()) {
      raw_fd = ::open(path.c_str(), O_RDONLY | O_CLOEXEC);
      if (raw_fd >= 0) break;
      vanished(path, "process exited without creating its log");
    }
    handle.wait_for(options.poll_interval);
  }
  FileDescriptor fd(raw_fd);

  struct stat origin {};
  if (::fstat(fd.get(), &origin) != 0) vanished(path, std::strerror(errno));

  std::vector<char> buffer(options.max_chunk);
  std::uint64_t total = 0;
  int idle_after_exit = 0;
  while (true) {
    // Exit must be observed before reading: an empty read after that point
    // means every byte the child wrote has been seen.
    const bool dead = handle.exited();
    std::size_t got = 0;
    while (true) {
      const ssize_t n = ::read(fd.get(), buffer.data(), buffer.size());
      if (n < 0) {
        if (errno == EINTR) continue;
        vanished(path, std::strerror(errno));
      }
      if (n == 0) break;
      sink(std::string_view(buffer.data(), static_cast<std::size_t>(n)));
      got += static_cast<std::size_t>(n);
    }
    total += got;

    if (got == 0) {
      struct stat now {};
      if (::stat(path.c_str(), &now) != 0) vanished(path, "removed while following");
      if (now.st_ino != origin.st_ino || now.st_dev != origin.st_dev) {
        vanished(path, "replaced while following");
      }
      if (dead && ++idle_after_exit >= options.drain_polls) break;
    } else {
      idle_after_exit = 0;
    }

    if (dead) {
      std::this_thread::sleep_for(options.poll_interval);
    } else {
      handle.wait_for(options.poll_interval);
    }
  }
  return total;
}

void LocalDirectoryFetcher::fetch(const model::CommitRef& /*commit*/, const fs::path& dest) {
  std::error_code ec;
  if (!fs::is_directory(source_, ec)) {
    throw Error(Errc::FetchFailed, "source directory missing: " + source_.string());
  }
  fs::copy(source_, dest, fs::copy_options::recursive | fs::copy_options::copy_symlinks, ec);
  if (ec) throw Error(Errc::FetchFailed, source_.string() + ": " + ec.message());
}

void GitFetcher::fetch(const model::CommitRef& commit, const fs::path& dest) {
  auto run = [&](const std::vector<std::string>& argv) {
    process::CommandResult r;
    try {
      r = process::run_capture(argv);
    } catch (const Error& e) {
      throw Error(Errc::FetchFailed, e.what());
    }
    if (r.exit_code != 0) {
      throw Error(Errc::FetchFailed, argv[1] + " exited " + std::to_string(r.exit_code) +
                                         ": " + r.output);
    }
  };
  run({"git", "clone", "--quiet", repo_url_, dest.string()});
  run({"git", "-C", dest.string(), "checkout", "--quiet", commit.sha});
}

BuildOutcome run_build(const protocol::Assignment& assignment, WorkspaceFetcher& fetcher,
                       const RunOptions& options) {
  BuildOutcome outcome;
  outcome.workspace = options.workspace_root / ("build-" + std::to_string(assignment.build_id));
  outcome.log_path = outcome.workspace / kLogFileName;

  std::error_code ec;
  fs::remove_all(outcome.workspace, ec);
  fs::create_directories(outcome.workspace, ec);
  if (ec) {
    throw Error(Errc::FetchFailed,
                "cannot create workspace " + outcome.workspace.string() + ": " + ec.message());
  }
  fetcher.fetch(assignment.commit, outcome.workspace);

  const fs::path script_path = outcome.workspace / assignment.hudson_script.file_name();
  {
    std::ofstream out(script_path, std::ios::binary | std::ios::trunc);
    out << assignment.hudson_script.text;
    if (!out) throw Error(Errc::SpawnFailed, "cannot write " + script_path.string());
  }
  fs::permissions(script_path, fs::perms::owner_all | fs::perms::group_read |
                                   fs::perms::group_exec | fs::perms::others_read |
                                   fs::perms::others_exec,
                  ec);
  fs::remove(outcome.log_path, ec);

  process::SpawnOptions spawn;
  spawn.argv = {"/bin/sh", script_path.string()};
  spawn.env = process::current_environment();
  for (const auto& name : options.unset_vars) spawn.env.erase(name);
  if (!options.install_dir.empty()) spawn.env["INSTALLDIR"] = options.install_dir;
  for (const auto& b : assignment.bindings) spawn.env[b.name] = b.value;
  spawn.cwd = outcome.workspace;
  spawn.output = outcome.log_path;

  auto handle = process::ProcessHandle::spawn(spawn);
  if (options.on_spawn) options.on_spawn(handle);

  auto sink = [&](std::string_view chunk) {
    ++outcome.chunk_count;
    if (options.on_chunk) options.on_chunk(chunk);
  };
  try {
    outcome.log_bytes = follow_log(outcome.log_path, *handle, sink, options.follow);
  } catch (...) {
    handle->kill(SIGKILL);
    handle->wait();
    throw;
  }
  outcome.exit_code = handle->wait();

  if (assignment.workspace_policy == protocol::WorkspacePolicy::kCleanAfter) {
    fs::remove_all(outcome.workspace, ec);
    if (ec || fs::exists(outcome.workspace)) {
      outcome.cleanup_error = std::string(errc_name(Errc::WorkspaceCleanupFailed)) + ": " +
                              outcome.workspace.string() + ": " + ec.message();
    }
  }
  return outcome;
}

}  // namespace forgeci::agent
