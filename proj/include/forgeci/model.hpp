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

// Domain values of the build orchestrator and the pure functions over them.
// Nothing in here touches the clock, the disk or the network.

#ifndef FORGECI_MODEL_HPP_
#define FORGECI_MODEL_HPP_

#include <chrono>
#include <compare>
#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

namespace forgeci::model {

using Clock = std::chrono::system_clock;
using Timestamp = Clock::time_point;
using BuildId = std::uint64_t;

// True iff `sha` is exactly 40 lowercase hex characters.
bool is_full_sha(std::string_view sha);
// Accepted at CLI/UI boundaries before expansion: 7..40 lowercase hex.
bool is_abbreviated_sha(std::string_view sha);

struct CommitRef {
  std::string repo_id;
  std::string sha;
  std::optional<std::string> branch;
  std::optional<int> pr_number;

  // sha is full; pr_number, when present, is positive.
  bool valid() const;
  // Additionally requires a branch or a PR number, as webhook events do.
  bool valid_trigger() const;

  bool operator==(const CommitRef&) const = default;
};

struct PlatformLabel {
  std::string value;

  auto operator<=>(const PlatformLabel&) const = default;
};

struct RuntimeVersion {
  std::string value;

  auto operator<=>(const RuntimeVersion&) const = default;
};

enum class TriggerKind { kBranchesAuto, kPrAuto, kBranchesManual, kPrManual };

std::string_view to_string(TriggerKind kind);
std::optional<TriggerKind> parse_trigger_kind(std::string_view s);
inline bool is_manual(TriggerKind kind) {
  return kind == TriggerKind::kBranchesManual || kind == TriggerKind::kPrManual;
}

struct JobDefinition {
  std::string name;
  TriggerKind trigger = TriggerKind::kBranchesAuto;
  PlatformLabel platform;
  std::vector<RuntimeVersion> versions;
  std::string pipeline_path = "travis.yml";
  std::vector<std::string> watched_branches = {"develop", "master"};

  bool operator==(const JobDefinition&) const = default;
};

// Validates job-table invariants against the declared version order.
// Returns an empty string when valid, otherwise a description.
std::string validate_jobs(const std::vector<JobDefinition>& jobs,
                          const std::vector<RuntimeVersion>& declared_versions);

enum class BuildState { kPending, kRunning, kSuccess, kFailure, kAborted };

std::string_view to_string(BuildState state);
std::optional<BuildState> parse_build_state(std::string_view s);
bool is_terminal(BuildState state);
bool can_transition(BuildState from, BuildState to);

struct Build {
  BuildId id = 0;           // master-wide unique id
  std::uint64_t number = 0; // monotonically increasing per job
  std::string job_name;
  PlatformLabel platform;
  RuntimeVersion version;
  CommitRef commit;
  BuildState state = BuildState::kPending;
  std::optional<int> exit_code;
  std::optional<Timestamp> started;
  std::optional<Timestamp> finished;
  std::string log_ref;
  std::string failure_cause;  // empty unless the failure did not come from the script

  // finished - started, 0 while not finished.
  std::int64_t duration_ms() const;
  // exit_code present iff Success/Failure; Success iff exit_code == 0.
  bool consistent() const;

  bool operator==(const Build&) const = default;
};

enum class TriggerCause { kBranchPush, kPrUpdate, kManual };

std::string_view to_string(TriggerCause cause);

struct TriggerEvent {
  TriggerCause cause = TriggerCause::kBranchPush;
  CommitRef commit;
  // For manual events: the job the administrator picked.
  std::optional<std::string> target_job;
};

struct TriggerGroup {
  std::string event_id;
  TriggerCause cause = TriggerCause::kBranchPush;
  CommitRef commit;
  std::vector<BuildId> builds;
};

// One Pending build per (matching job, version), ordered by job-table index
// then version index. Ids and numbers are left at 0 for the caller to assign.
std::vector<Build> expand_matrix(const TriggerEvent& event,
                                 const std::vector<JobDefinition>& jobs);

struct SuiteSummary {
  std::uint64_t passed = 0;
  std::uint64_t failed = 0;
  std::uint64_t incomplete = 0;
};

// 0 iff nothing failed, nothing is incomplete and the runner did not crash.
int derive_exit(const SuiteSummary& summary, bool crashed);

struct CompatibilityEntry {
  PlatformLabel platform;
  RuntimeVersion runtime_version;
  std::string dependency_name;
  std::string dependency_version;

  auto operator<=>(const CompatibilityEntry&) const = default;
};

// Closed world: only declared tuples are compatible.
class CompatibilityMatrix {
 public:
  CompatibilityMatrix() = default;
  explicit CompatibilityMatrix(std::set<CompatibilityEntry> entries)
      : entries_(std::move(entries)) {}

  void declare(CompatibilityEntry entry) { entries_.insert(std::move(entry)); }
  const std::set<CompatibilityEntry>& entries() const { return entries_; }

 private:
  std::set<CompatibilityEntry> entries_;
};

bool is_compatible(const CompatibilityMatrix& matrix,
                   const PlatformLabel& platform,
                   const RuntimeVersion& runtime_version,
                   std::string_view dep_name, std::string_view dep_version);

// The COBRA Toolbox job table: branches-auto on four platforms across all
// versions, pr-auto with the full axis on linux and the most stable version
// elsewhere, and the two linux-only manual jobs.
std::vector<RuntimeVersion> default_versions();
std::vector<PlatformLabel> default_platforms();
std::vector<JobDefinition> default_job_table();

}  // namespace forgeci::model

#endif  // FORGECI_MODEL_HPP_
