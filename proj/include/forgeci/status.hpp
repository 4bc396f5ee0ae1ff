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

// Commit statuses, their per-platform aggregation, badges, manual overrides
// and the pluggable clients that publish them.

#ifndef FORGECI_STATUS_HPP_
#define FORGECI_STATUS_HPP_

#include <chrono>
#include <filesystem>
#include <functional>
#include <map>
#include <mutex>
#include <ostream>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "forgeci/model.hpp"

namespace forgeci::status {

enum class StatusState { kPending, kSuccess, kFailure };

std::string_view to_string(StatusState state);
std::optional<StatusState> parse_status_state(std::string_view s);

// Pending/Running -> pending, Success -> success, Failure/Aborted -> failure.
StatusState status_of(model::BuildState state);

struct CommitStatus {
  std::string sha;
  std::string context;  // ci/<jobName>/<version>/<platform>
  StatusState state = StatusState::kPending;
  std::string target_url;
  std::string description;

  bool operator==(const CommitStatus&) const = default;
};

struct ParsedContext {
  std::string job_name;
  model::RuntimeVersion version;
  model::PlatformLabel platform;
};

std::string make_context(std::string_view job_name, const model::RuntimeVersion& version,
                         const model::PlatformLabel& platform);
// Throws Error{MalformedContext}.
ParsedContext parse_context(std::string_view context);

// The VCS side of commit statuses. Implementations throw
// Error{TransientClientError} for retryable failures.
class VcsStatusClient {
 public:
  virtual ~VcsStatusClient() = default;

  virtual void set(const CommitStatus& status) = 0;
  // Latest status per context, sorted by context.
  virtual std::vector<CommitStatus> list(const std::string& sha) = 0;
  // Expands an abbreviated sha (>= 7 hex chars) to the full 40-char form.
  // Throws Error{BadSha} when the prefix is malformed, unknown or ambiguous.
  virtual std::string resolve_sha(std::string_view abbreviated) = 0;
};

class InMemoryStatusClient : public VcsStatusClient {
 public:
  void set(const CommitStatus& status) override;
  std::vector<CommitStatus> list(const std::string& sha) override;
  std::string resolve_sha(std::string_view abbreviated) override;

  void register_commit(const std::string& sha);
  std::size_t write_count() const;

 private:
  mutable std::mutex mu_;
  std::map<std::string, std::map<std::string, CommitStatus>> store_;
  std::set<std::string> commits_;
  std::size_t writes_ = 0;
};

// Appends one JSON object per write; reads replay the file, latest wins.
class FileStatusClient : public VcsStatusClient {
 public:
  explicit FileStatusClient(std::filesystem::path path);

  void set(const CommitStatus& status) override;
  std::vector<CommitStatus> list(const std::string& sha) override;
  std::string resolve_sha(std::string_view abbreviated) override;

  void register_commit(const std::string& sha);

 private:
  std::filesystem::path path_;
  std::mutex mu_;
  std::set<std::string> commits_;
};

// Shared prefix expansion used by the bundled clients.
std::string resolve_against(std::string_view abbreviated,
                            const std::set<std::string>& known);

struct RetryPolicy {
  int max_retries = 3;
  std::chrono::milliseconds base_delay{100};
  std::function<void(std::chrono::milliseconds)> sleep;  // defaults to a real sleep
};

struct Acknowledgment {
  int attempts = 0;
};

// Retries transient client failures with exponential backoff, then gives up
// with Error{PermanentClientError}.
Acknowledgment set_status(VcsStatusClient& client, const CommitStatus& status,
                          const RetryPolicy& policy = {});

using Cell = std::pair<model::PlatformLabel, model::RuntimeVersion>;

struct PlatformStatusMatrix {
  std::string sha;
  std::map<Cell, StatusState> cells;
  std::map<model::PlatformLabel, StatusState> per_platform;
  StatusState global = StatusState::kPending;
};

// failure if any failure; success iff non-empty and all success; else pending.
StatusState combine(const std::vector<StatusState>& states);

// Missing expected cells count as pending. Statuses on the same cell from
// different jobs are combined with the same rule.
PlatformStatusMatrix aggregate(const std::string& sha,
                               const std::vector<CommitStatus>& statuses,
                               const std::vector<Cell>& expected);

struct Badge {
  model::PlatformLabel platform;
  StatusState state = StatusState::kPending;
  std::string svg;
};

std::string_view badge_text(StatusState state);
std::string_view badge_color(StatusState state);
Badge render_badge(const model::PlatformLabel& platform, StatusState state);

struct AuditEntry {
  std::string actor;
  std::string sha;
  std::string context;
  StatusState old_state = StatusState::kPending;
  StatusState new_state = StatusState::kPending;
  model::Timestamp time;
};

// Throws Error{Unauthorized, UnknownContext}.
CommitStatus override_status(VcsStatusClient& client, const std::string& sha,
                             const std::string& context, StatusState state,
                             const std::string& actor,
                             const std::set<std::string>& admins,
                             std::vector<AuditEntry>& audit, model::Timestamp now);

struct Notification {
  model::BuildId build_id = 0;
  std::string job_name;
  std::string platform;
  std::string version;
  std::string sha;
  int exit_code = 0;
  std::string cause;
  std::string console_url;
};

class NotificationSink {
 public:
  virtual ~NotificationSink() = default;
  virtual void notify(const Notification& n) = 0;
};

class RecordingSink : public NotificationSink {
 public:
  void notify(const Notification& n) override;
  std::vector<Notification> notifications() const;

 private:
  mutable std::mutex mu_;
  std::vector<Notification> seen_;
};

class StreamSink : public NotificationSink {
 public:
  explicit StreamSink(std::ostream& out) : out_(out) {}
  void notify(const Notification& n) override;

 private:
  std::mutex mu_;
  std::ostream& out_;
};

}  // namespace forgeci::status

#endif  // FORGECI_STATUS_HPP_
