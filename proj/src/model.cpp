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

#include "forgeci/model.hpp"

#include <algorithm>
#include <unordered_set>

#include "forgeci/text.hpp"

namespace forgeci::model {

bool is_full_sha(std::string_view sha) {
  return sha.size() == 40 && text::is_hex(sha);
}

bool is_abbreviated_sha(std::string_view sha) {
  return sha.size() >= 7 && sha.size() <= 40 && text::is_hex(sha);
}

bool CommitRef::valid() const {
  return is_full_sha(sha) && (!pr_number || *pr_number > 0);
}

bool CommitRef::valid_trigger() const {
  return valid() && (branch.has_value() || pr_number.has_value());
}

std::string_view to_string(TriggerKind kind) {
  switch (kind) {
    case TriggerKind::kBranchesAuto: return "branches_auto";
    case TriggerKind::kPrAuto: return "pr_auto";
    case TriggerKind::kBranchesManual: return "branches_manual";
    case TriggerKind::kPrManual: return "pr_manual";
  }
  return "";
}

std::optional<TriggerKind> parse_trigger_kind(std::string_view s) {
  for (auto k : {TriggerKind::kBranchesAuto, TriggerKind::kPrAuto,
                 TriggerKind::kBranchesManual, TriggerKind::kPrManual}) {
    if (to_string(k) == s) return k;
  }
  return std::nullopt;
}

std::string validate_jobs(const std::vector<JobDefinition>& jobs,
                          const std::vector<RuntimeVersion>& declared_versions) {
  std::unordered_set<std::string> names;
  for (const JobDefinition& job : jobs) {
    if (job.name.empty()) return "job with empty name";
    if (!names.insert(job.name).second) return "duplicate job name " + job.name;
    if (job.platform.value.empty()) return job.name + ": missing platform";
    if (job.versions.empty()) return job.name + ": empty version list";
    for (const RuntimeVersion& v : job.versions) {
      if (!declared_versions.empty() &&
          std::find(declared_versions.begin(), declared_versions.end(), v) ==
              declared_versions.end()) {
        return job.name + ": undeclared version " + v.value;
      }
    }
    if (job.pipeline_path.empty()) return job.name + ": empty pipeline path";
  }
  return {};
}

std::string_view to_string(BuildState state) {
  switch (state) {
    case BuildState::kPending: return "Pending";
    case BuildState::kRunning: return "Running";
    case BuildState::kSuccess: return "Success";
    case BuildState::kFailure: return "Failure";
    case BuildState::kAborted: return "Aborted";
  }
  return "";
}

std::optional<BuildState> parse_build_state(std::string_view s) {
  for (auto st : {BuildState::kPending, BuildState::kRunning, BuildState::kSuccess,
                  BuildState::kFailure, BuildState::kAborted}) {
    if (to_string(st) == s) return st;
  }
  return std::nullopt;
}

bool is_terminal(BuildState state) {
  return state == BuildState::kSuccess || state == BuildState::kFailure ||
         state == BuildState::kAborted;
}

bool can_transition(BuildState from, BuildState to) {
  switch (from) {
    case BuildState::kPending:
      return to == BuildState::kRunning || to == BuildState::kAborted;
    case BuildState::kRunning:
      return to == BuildState::kSuccess || to == BuildState::kFailure ||
             to == BuildState::kAborted;
    default:
      return false;
  }
}

std::int64_t Build::duration_ms() const {
  if (!started || !finished) return 0;
  const auto d =
      std::chrono::duration_cast<std::chrono::milliseconds>(*finished - *started);
  return std::max<std::int64_t>(0, d.count());
}

bool Build::consistent() const {
  const bool needs_code =
      state == BuildState::kSuccess || state == BuildState::kFailure;
  if (needs_code != exit_code.has_value()) return false;
  if (exit_code && ((state == BuildState::kSuccess) != (*exit_code == 0))) {
    return false;
  }
  return duration_ms() >= 0;
}

std::string_view to_string(TriggerCause cause) {
  switch (cause) {
    case TriggerCause::kBranchPush: return "branch_push";
    case TriggerCause::kPrUpdate: return "pr_update";
    case TriggerCause::kManual: return "manual";
  }
  return "";
}

namespace {

bool job_matches(const JobDefinition& job, const TriggerEvent& event) {
  switch (event.cause) {
    case TriggerCause::kBranchPush:
      return job.trigger == TriggerKind::kBranchesAuto && event.commit.branch &&
             std::find(job.watched_branches.begin(), job.watched_branches.end(),
                       *event.commit.branch) != job.watched_branches.end();
    case TriggerCause::kPrUpdate:
      return job.trigger == TriggerKind::kPrAuto;
    case TriggerCause::kManual:
      return is_manual(job.trigger) &&
             (!event.target_job || *event.target_job == job.name);
  }
  return false;
}

}  // namespace

std::vector<Build> expand_matrix(const TriggerEvent& event,
                                 const std::vector<JobDefinition>& jobs) {
  std::vector<Build> builds;
  for (const JobDefinition& job : jobs) {
    if (!job_matches(job, event)) continue;
    for (const RuntimeVersion& version : job.versions) {
      Build b;
      b.job_name = job.name;
      b.platform = job.platform;
      b.version = version;
      b.commit = event.commit;
      b.state = BuildState::kPending;
      builds.push_back(std::move(b));
    }
  }
  return builds;
}

int derive_exit(const SuiteSummary& summary, bool crashed) {
  return (summary.failed == 0 && summary.incomplete == 0 && !crashed) ? 0 : 1;
}

bool is_compatible(const CompatibilityMatrix& matrix,
                   const PlatformLabel& platform,
                   const RuntimeVersion& runtime_version,
                   std::string_view dep_name, std::string_view dep_version) {
  return matrix.entries().contains(CompatibilityEntry{
      platform, runtime_version, std::string(dep_name), std::string(dep_version)});
}

std::vector<RuntimeVersion> default_versions() {
  return {{"R2014b"}, {"R2015b"}, {"R2016b"}, {"R2017b"}};
}

std::vector<PlatformLabel> default_platforms() {
  return {{"linux"}, {"macOS"}, {"windows7"}, {"windows10"}};
}

std::vector<JobDefinition> default_job_table() {
  const auto all = default_versions();
  const std::vector<RuntimeVersion> stable = {{"R2016b"}};
  std::vector<JobDefinition> jobs;
  auto add = [&](std::string name, TriggerKind trigger, std::string platform,
                 std::vector<RuntimeVersion> versions) {
    JobDefinition job;
    job.name = std::move(name);
    job.trigger = trigger;
    job.platform = PlatformLabel{std::move(platform)};
    job.versions = std::move(versions);
    jobs.push_back(std::move(job));
  };
  for (const auto& p : default_platforms()) {
    add("COBRAToolbox-branches-auto-" + p.value, TriggerKind::kBranchesAuto,
        p.value, all);
  }
  for (const auto& p : default_platforms()) {
    add("COBRAToolbox-pr-auto-" + p.value, TriggerKind::kPrAuto, p.value,
        p.value == "linux" ? all : stable);
  }
  add("COBRAToolbox-branches-manual-linux", TriggerKind::kBranchesManual, "linux",
      all);
  add("COBRAToolbox-pr-manual-linux", TriggerKind::kPrManual, "linux", all);
  return jobs;
}

}  // namespace forgeci::model
