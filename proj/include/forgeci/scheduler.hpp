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


// The master's scheduling state machine. Every mutation goes through one
// Scheduler instance from a single thread; the network and HTTP layers feed
// it events and never touch its state directly. Time is always passed in, so
// tests drive it with a fake clock.

#ifndef FORGECI_SCHEDULER_HPP_
#define FORGECI_SCHEDULER_HPP_

#include <deque>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "forgeci/config.hpp"
#include "forgeci/model.hpp"
#include "forgeci/protocol.hpp"
#include "forgeci/status.hpp"
#include "forgeci/store.hpp"

namespace forgeci::master {

enum class WebhookKind { kPush, kPrOpened, kPrSynchronized, kStatusChanged };

std::string_view to_string(WebhookKind kind);
// Header spellings: push, pr_opened, pr_synchronized, status_changed.
std::optional<WebhookKind> parse_webhook_kind(std::string_view s);

struct WebhookEvent {
  WebhookKind kind = WebhookKind::kPush;
  std::string repo_id;
  std::optional<std::string> branch;
  std::string sha;
  std::optional<int> pr_number;
  std::string sender;
};

// Decodes {"repo_id","branch","sha","pr_number","sender"}.
// Throws Error{MalformedPayload}.
WebhookEvent parse_webhook(std::string_view kind, std::string_view body);
nlohmann::json to_json(const WebhookEvent& event);

// Hex HMAC-SHA256 of the body under the shared secret.
std::string sign_body(std::string_view secret, std::string_view body);
bool verify_signature(std::string_view secret, std::string_view body,
                      std::string_view signature);

// First 16 hex chars of sha256(kind|sha|pr_number|delivery_id).
std::string event_id(const WebhookEvent& event, std::string_view delivery_id);

struct Ignored {
  std::string reason;
};

using IngestResult = std::variant<model::TriggerGroup, Ignored>;

// The master's handle on one agent connection.
class AgentLink {
 public:
  virtual ~AgentLink() = default;
  virtual std::uint64_t id() const = 0;
  // Throws Error{ConnectionFailed}.
  virtual void send(protocol::MessageKind kind, const nlohmann::json& body) = 0;
  virtual void close() = 0;
};

enum class AgentState { kIdle, kBusy, kLost };

std::string_view to_string(AgentState state);

struct AgentInfo {
  std::string name;
  model::PlatformLabel platform;
  AgentState state = AgentState::kIdle;
  std::optional<model::BuildId> build;
  model::Timestamp last_seen;
  protocol::AgentHello hello;
  std::shared_ptr<AgentLink> link;
};

struct TrendPoint {
  model::BuildId build_id = 0;
  std::uint64_t number = 0;
  std::int64_t duration_ms = 0;
  model::BuildState state = model::BuildState::kSuccess;
};

struct TrendSeries {
  std::string job_name;
  std::vector<TrendPoint> points;  // by build id
};

struct ReloadResult {
  bool reloaded = false;
  std::string reason;  // "busy" or "not-due" when skipped
};

// Loads the pipeline text of `job` at `commit`. Throws any Error.
using PipelineSource =
    std::function<std::string(const model::JobDefinition& job, const model::CommitRef& commit)>;
// Expands an abbreviated sha. Throws Error{BadSha}.
using ShaResolver = std::function<std::string(std::string_view)>;
using ConfigLoader = std::function<config::MasterConfig()>;

struct SchedulerDeps {
  BuildStore* store = nullptr;
  status::VcsStatusClient* vcs = nullptr;
  status::NotificationSink* notify = nullptr;  // optional
  PipelineSource pipeline_source;
  ShaResolver resolve_sha;  // optional; full shas always work
  status::RetryPolicy retry;
};

// Most recent local HH:MM at or before `now`.
model::Timestamp last_maintenance_instant(model::Timestamp now, int hour, int minute);

std::string console_path(const model::Build& build);

class Scheduler {
 public:
  Scheduler(config::MasterConfig config, SchedulerDeps deps, model::Timestamp now);

  const config::MasterConfig& config() const { return config_; }

  // Replays the store: Pending builds are queued again, Running builds fail
  // with cause master_restart.
  void restore(model::Timestamp now);

  // Throws Error{MalformedPayload}.
  IngestResult ingest_webhook(const WebhookEvent& event, std::string_view delivery_id,
                              model::Timestamp now);
  // Throws Error{NoSuchJob, NotManuallyTriggerable, BadSha}.
  model::TriggerGroup manual_trigger(const std::string& job_name, std::string_view sha,
                                     const std::string& actor, model::Timestamp now);
  // Schedules the same cell again as a manual group. Throws Error{UnknownBuild}.
  model::TriggerGroup relaunch(model::BuildId id, const std::string& actor, model::Timestamp now);

  // Answers the HELLO on the link. A newer connection under the same name
  // supersedes the old one. Returns whether the agent was accepted.
  bool agent_hello(std::shared_ptr<AgentLink> link, const protocol::AgentHello& hello,
                   model::Timestamp now);
  // Throws protocol errors (ChunkGap, MalformedFrame); the caller drops the link.
  void agent_message(std::uint64_t link_id, const protocol::WireMessage& msg,
                     model::Timestamp now);
  void agent_disconnected(std::uint64_t link_id, model::Timestamp now);
  // Marks silent agents Lost; returns their names.
  std::vector<std::string> check_heartbeats(model::Timestamp now);

  // Oldest Pending build per idle agent's platform.
  std::vector<std::pair<std::string, protocol::Assignment>> dispatch(model::Timestamp now);

  // Throws Error{UnknownBuild, NotRunning}.
  model::Build record_result(model::BuildId id, int exit_code, bool log_complete,
                             model::Timestamp now, const std::string& cause = {});
  // Pending builds abort at once; Running builds are cancelled on their agent.
  // Throws Error{UnknownBuild}.
  model::Build abort(model::BuildId id, model::Timestamp now);

  // Throws Error{InvalidArgument} when keep_last is 0.
  std::size_t prune_retention(std::size_t keep_last);
  // Throws Error{ConfigInvalid}; the old config stays active.
  ReloadResult maintenance_reload(model::Timestamp now, const ConfigLoader& loader);
  // Throws Error{NoSuchJob}.
  TrendSeries build_time_trend(const std::string& job_name) const;

  // Throws Error{Unauthorized, UnknownContext}.
  status::CommitStatus override_status(const std::string& sha, const std::string& context,
                                       status::StatusState state, const std::string& actor,
                                       model::Timestamp now);

  const BuildRecord* find(model::BuildId id) const;
  const BuildRecord* find(const std::string& job, std::uint64_t number) const;
  std::vector<const BuildRecord*> builds_for_sha(const std::string& sha) const;
  std::optional<model::TriggerGroup> group(const std::string& event_id) const;
  std::optional<model::TriggerGroup> latest_branch_group(const std::string& branch) const;
  std::vector<AgentInfo> agents() const;
  std::vector<model::BuildId> queue(const model::PlatformLabel& platform) const;
  std::size_t build_count() const { return builds_.size(); }

  status::PlatformStatusMatrix matrix(const std::string& sha) const;
  // Badge state of `platform` for the latest group on the badge branch.
  status::StatusState badge_state(const model::PlatformLabel& platform) const;

  // Empty when the conservation and one-build-per-agent invariants hold.
  std::string check_invariants() const;

  std::size_t status_failures() const { return status_failures_; }

 private:
  model::TriggerGroup create_group(std::string event_id, model::TriggerCause cause,
                                   std::vector<model::Build> cells, model::Timestamp now);
  void persist(const BuildRecord& r);
  void publish(const model::Build& b, const std::string& description);
  void finish(BuildRecord& r, model::BuildState state, std::optional<int> exit_code,
              std::string cause, model::Timestamp now);
  void lose_agent(AgentInfo& agent, model::Timestamp now);
  AgentInfo* agent_by_link(std::uint64_t link_id);
  AgentInfo* agent_with_build(model::BuildId id);
  std::optional<protocol::Assignment> assignment_for(BuildRecord& r, model::Timestamp now);
  void prune_job(const std::string& job, std::size_t keep_last, std::size_t* count);

  struct Progress {
    std::uint64_t bytes = 0;
    std::uint64_t chunks = 0;
  };

  config::MasterConfig config_;
  SchedulerDeps deps_;
  model::Timestamp last_reload_;

  model::BuildId next_id_ = 1;
  std::map<model::BuildId, BuildRecord> builds_;
  std::map<std::pair<std::string, std::uint64_t>, model::BuildId> by_number_;
  std::map<std::string, std::uint64_t> job_counters_;
  std::map<model::PlatformLabel, std::deque<model::BuildId>> queues_;
  std::map<std::string, AgentInfo> agents_;
  std::map<std::string, model::TriggerGroup> groups_;
  std::vector<std::string> group_order_;
  std::set<model::BuildId> abort_requested_;
  std::map<model::BuildId, Progress> progress_;
  protocol::ChunkTracker chunks_;
  std::map<std::pair<std::string, std::string>, std::variant<pipeline::PipelineSpec, std::string>>
      pipeline_cache_;
  std::uint64_t manual_counter_ = 0;
  std::size_t status_failures_ = 0;
};

}  // namespace forgeci::master

#endif  // FORGECI_SCHEDULER_HPP_
