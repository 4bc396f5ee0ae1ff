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

// Slave-side build execution. The build script always runs detached with
// its output routed to `output.log`, and the log is streamed by following
// that file, on every platform. Following stops only once the child has
// exited and the file has been drained.

#ifndef FORGECI_AGENT_HPP_
#define FORGECI_AGENT_HPP_

#include <chrono>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "forgeci/model.hpp"
#include "forgeci/process.hpp"
#include "forgeci/protocol.hpp"

namespace forgeci::agent {

inline constexpr std::string_view kLogFileName = "output.log";

using ChunkSink = std::function<void(std::string_view)>;

struct FollowOptions {
  std::chrono::milliseconds poll_interval{50};
  // How long the log file may take to appear.
  std::chrono::milliseconds grace{5000};
  std::size_t max_chunk = protocol::kMaxChunkPayload;
  // Consecutive empty polls after exit before the stream is declared drained.
  int drain_polls = 2;
};

// Emits bytes appended to `path` in file order while `handle` lives, then
// drains everything written before exit. Returns the number of bytes emitted.
// Throws Error{FileVanished} when the file never appears or is removed or
// replaced while being followed.
std::uint64_t follow_log(const std::filesystem::path& path,
                         const process::ProcessHandle& handle, const ChunkSink& sink,
                         const FollowOptions& options = {});

// Materializes a commit into an empty directory.
class WorkspaceFetcher {
 public:
  virtual ~WorkspaceFetcher() = default;
  // Throws Error{FetchFailed}.
  virtual void fetch(const model::CommitRef& commit, const std::filesystem::path& dest) = 0;
};

// Copies a local directory tree (tests, air-gapped agents).
class LocalDirectoryFetcher : public WorkspaceFetcher {
 public:
  explicit LocalDirectoryFetcher(std::filesystem::path source) : source_(std::move(source)) {}
  void fetch(const model::CommitRef& commit, const std::filesystem::path& dest) override;

 private:
  std::filesystem::path source_;
};

// `git clone` + `git checkout <sha>`.
class GitFetcher : public WorkspaceFetcher {
 public:
  explicit GitFetcher(std::string repo_url) : repo_url_(std::move(repo_url)) {}
  void fetch(const model::CommitRef& commit, const std::filesystem::path& dest) override;

 private:
  std::string repo_url_;
};

struct RunOptions {
  std::filesystem::path workspace_root;
  std::string install_dir;
  // Removed from the inherited environment before launch.
  std::vector<std::string> unset_vars;
  FollowOptions follow;
  ChunkSink on_chunk;
  // Called once the child is running; lets the caller cancel it.
  std::function<void(std::shared_ptr<process::ProcessHandle>)> on_spawn;
};

struct BuildOutcome {
  int exit_code = 0;
  std::uint64_t log_bytes = 0;
  std::uint64_t chunk_count = 0;
  std::filesystem::path workspace;
  std::filesystem::path log_path;
  // WorkspaceCleanupFailed detail; never changes exit_code.
  std::optional<std::string> cleanup_error;
};

// Fetches the workspace, writes the Hudson script, runs it with output routed
// to output.log, streams the log and applies the workspace policy.
// Throws Error{FetchFailed, SpawnFailed, FileVanished}.
BuildOutcome run_build(const protocol::Assignment& assignment, WorkspaceFetcher& fetcher,
                       const RunOptions& options);

}  // namespace forgeci::agent

#endif  // FORGECI_AGENT_HPP_
