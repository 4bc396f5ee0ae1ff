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


#include "forgeci/scheduler.hpp"

#include <time.h>

#include <algorithm>
#include <iostream>

#include "forgeci/crypto.hpp"
#include "forgeci/error.hpp"
#include "forgeci/pipeline.hpp"

namespace forgeci::master {

using json = nlohmann::json;
using model::Build;
using model::BuildId;
using model::BuildState;
using model::Timestamp;

std::string_view to_string(WebhookKind kind) {
  switch (kind) {
    case WebhookKind::kPush: return "push";
    case WebhookKind::kPrOpened: return "pr_opened";
    case WebhookKind::kPrSynchronized: return "pr_synchronized";
    case WebhookKind::kStatusChanged: return "status_changed";
  }
  return "";
}

std::optional<WebhookKind> parse_webhook_kind(std::string_view s) {
  for (auto k : {WebhookKind::kPush, WebhookKind::kPrOpened, WebhookKind::kPrSynchronized,
                 WebhookKind::kStatusChanged}) {
    if (to_string(k) == s) return k;
  }
  return std::nullopt;
}

WebhookEvent parse_webhook(std::string_view kind, std::string_view body) {
  const auto k = parse_webhook_kind(kind);
  if (!k) throw Error(Errc::MalformedPayload, "unknown event kind '" + std::string(kind) + "'");
  const json j = json::parse(body, nullptr, false);
  if (j.is_discarded() || !j.is_object()) throw Error(Errc::MalformedPayload, "body is not a JSON object");
  WebhookEvent e;
  e.kind = *k;
  try {
    e.repo_id = j.value("repo_id", std::string{});
    e.sha = j.at("sha").get<std::string>();
    e.sender = j.value("sender", std::string{});
    if (j.contains("branch") && !j["branch"].is_null()) e.branch = j["branch"].get<std::string>();
    if (j.contains("pr_number") && !j["pr_number"].is_null()) {
      e.pr_number = j["pr_number"].get<int>();
    }
  } catch (const json::exception& ex) {
    throw Error(Errc::MalformedPayload, ex.what());
  }
  if (!model::is_full_sha(e.sha)) throw Error(Errc::MalformedPayload, "sha must be 40 hex chars");
  if (e.kind == WebhookKind::kPush && (!e.branch || e.branch->empty())) {
    throw Error(Errc::MalformedPayload, "push without branch");
  }
  if ((e.kind == WebhookKind::kPrOpened || e.kind == WebhookKind::kPrSynchronized) &&
      (!e.pr_number || *e.pr_number <= 0)) {
    throw Error(Errc::MalformedPayload, "pull request event without a positive pr_number");
  }
  return e;
}

json to_json(const WebhookEvent& e) {
  json j = {{"repo_id", e.repo_id}, {"sha", e.sha}, {"sender", e.sender}};
  j["branch"] = e.branch ? json(*e.branch) : json(nullptr);
  j["pr_number"] = e.pr_number ? json(*e.pr_number) : json(nullptr);
  return j;
}

std::string sign_body(std::string_view secret, std::string_view body) {
  return crypto::hmac_sha256_hex(secret, body);
}

bool verify_signature(std::string_view secret, std::string_view body,
                      std::string_view signature) {
  std::string sig(signature);
  if (sig.starts_with("sha256=")) sig.erase(0, 7);
  return crypto::constant_time_equal(sign_body(secret, body), sig);
}

std::string event_id(const WebhookEvent& e, std::string_view delivery_id) {
  const std::string key = std::string(to_string(e.kind)) + "|" + e.sha + "|" +
                          (e.pr_number ? std::to_string(*e.pr_number) : "") + "|" +
                          std::string(delivery_id);
  return crypto::sha256_hex(key).substr(0, 16);
}

std::string_view to_string(AgentState state) {
  switch (state) {
    case AgentState::kIdle: return "idle";
    case AgentState::kBusy: return "busy";
    case AgentState::kLost: return "lost";
  }
  return "";
}

Timestamp last_maintenance_instant(Timestamp now, int hour, int minute) {
  const std::time_t t = model::Clock::to_time_t(now);
  std::tm lt{};
  ::localtime_r(&t, &lt);
  auto at = [&](std::tm day) {
    day.tm_hour = hour;
    day.tm_min = minute;
    day.tm_sec = 0;
    day.tm_isdst = -1;
    return std::mktime(&day);
  };
  std::time_t due = at(lt);
  if (due > t) {
    std::tm yesterday = lt;
    yesterday.tm_mday -= 1;
    due = at(yesterday);
  }
  return model::Clock::from_time_t(due);
}

std::string console_path(const Build& b) {
  return "/job/" + b.job_name + "/" + std::to_string(b.number) + "/" + b.version.value + "/" +
         b.platform.value + "/console";
}

Scheduler::Scheduler(config::MasterConfig config, SchedulerDeps deps, Timestamp now)
    : config_(std::move(config)), deps_(std::move(deps)), last_reload_(now) {
  if (!deps_.store || !deps_.vcs) throw Error(Errc::InvalidArgument, "scheduler needs a store and a VCS client");
}

void Scheduler::restore(Timestamp now) {
  const BuildStore::Snapshot snap = deps_.store->load();
  for (const BuildRecord& r : snap.builds) {
    builds_[r.build.id] = r;
    by_number_[{r.build.job_name, r.build.number}] = r.build.id;
    next_id_ = std::max(next_id_, r.build.id + 1);
    auto& counter = job_counters_[r.build.job_name];
    counter = std::max(counter, r.build.number);
  }
  for (const auto& g : snap.groups) {
    if (groups_.emplace(g.event_id, g).second) group_order_.push_back(g.event_id);
  }
  for (auto& [id, r] : builds_) {
    if (r.build.state == BuildState::kPending) {
      queues_[r.build.platform].push_back(id);
    } else if (r.build.state == BuildState::kRunning) {
      finish(r, BuildState::kFailure, 1, "master_restart", now);
    }
  }
}

void Scheduler::persist(const BuildRecord& r) {
  try {
    deps_.store->save(r);
  } catch (const Error& e) {
    std::cerr << "forgeci: cannot persist build " << r.build.id << ": " << e.what() << '\n';
  }
}

void Scheduler::publish(const Build& b, const std::string& description) {
  status::CommitStatus st;
  st.sha = b.commit.sha;
  st.context = status::make_context(b.job_name, b.version, b.platform);
  st.state = status::status_of(b.state);
  st.target_url = config_.resolved_public_url() + console_path(b);
  st.description = description;
  try {
    status::set_status(*deps_.vcs, st, deps_.retry);
  } catch (const Error& e) {
    ++status_failures_;
    std::cerr << "forgeci: status update for " << st.context << " failed: " << e.what() << '\n';
  }
}

model::TriggerGroup Scheduler::create_group(std::string id, model::TriggerCause cause,
                                            std::vector<Build> cells, Timestamp now) {
  model::TriggerGroup group;
  group.event_id = std::move(id);
  group.cause = cause;
  if (!cells.empty()) group.commit = cells.front().commit;
  for (Build& b : cells) {
    b.id = next_id_++;
    b.number = ++job_counters_[b.job_name];
    b.log_ref = "jobs/" + b.job_name + "/" + std::to_string(b.number) + ".log";
    BuildRecord& r = builds_[b.id];
    r.build = std::move(b);
    by_number_[{r.build.job_name, r.build.number}] = r.build.id;
    queues_[r.build.platform].push_back(r.build.id);
    group.builds.push_back(r.build.id);
    persist(r);
  }
  groups_[group.event_id] = group;
  group_order_.push_back(group.event_id);
  try {
    deps_.store->save_group(group);
  } catch (const Error& e) {
    std::cerr << "forgeci: cannot persist group " << group.event_id << ": " << e.what() << '\n';
  }
  for (BuildId id : group.builds) publish(builds_[id].build, "Queued");
  (void)now;
  return group;
}

IngestResult Scheduler::ingest_webhook(const WebhookEvent& event, std::string_view delivery_id,
                                       Timestamp now) {
  const std::string id = event_id(event, delivery_id);
  if (auto it = groups_.find(id); it != groups_.end()) return it->second;
  if (!config_.bot_account.empty() && event.sender == config_.bot_account) {
    return Ignored{"self-event"};
  }
  if (!event.repo_id.empty() && event.repo_id != config_.repo_id) {
    return Ignored{"foreign-repository"};
  }

  model::TriggerEvent trigger;
  switch (event.kind) {
    case WebhookKind::kPush:
      trigger.cause = model::TriggerCause::kBranchPush;
      break;
    case WebhookKind::kPrOpened:
    case WebhookKind::kPrSynchronized:
      trigger.cause = model::TriggerCause::kPrUpdate;
      break;
    case WebhookKind::kStatusChanged:
      return Ignored{"no-matrix-cells"};
  }
  trigger.commit = {config_.repo_id, event.sha, event.branch, event.pr_number};
  if (trigger.cause == model::TriggerCause::kBranchPush) trigger.commit.pr_number.reset();
  if (!trigger.commit.valid_trigger()) throw Error(Errc::MalformedPayload, "invalid commit reference");

  auto cells = model::expand_matrix(trigger, config_.jobs);
  if (cells.empty()) return Ignored{"no-matrix-cells"};
  return create_group(id, trigger.cause, std::move(cells), now);
}

model::TriggerGroup Scheduler::manual_trigger(const std::string& job_name, std::string_view sha,
                                              const std::string& actor, Timestamp now) {
  const model::JobDefinition* job = config_.find_job(job_name);
  if (!job) throw Error(Errc::NoSuchJob, job_name);
  if (!model::is_manual(job->trigger)) {
    throw Error(Errc::NotManuallyTriggerable,
                job_name + " is " + std::string(model::to_string(job->trigger)));
  }
  std::string full;
  if (model::is_full_sha(sha)) {
    full = std::string(sha);
  } else if (!model::is_abbreviated_sha(sha)) {
    throw Error(Errc::BadSha, "'" + std::string(sha) + "' is not 7-40 lowercase hex characters");
  } else if (deps_.resolve_sha) {
    full = deps_.resolve_sha(sha);
  } else {
    throw Error(Errc::BadSha, "cannot expand abbreviated sha " + std::string(sha));
  }

  model::TriggerEvent trigger;
  trigger.cause = model::TriggerCause::kManual;
  trigger.commit = {config_.repo_id, full, std::nullopt, std::nullopt};
  trigger.target_job = job_name;
  const std::string id =
      "manual-" + crypto::sha256_hex(job_name + "|" + full + "|" +
                                     std::to_string(to_epoch_ms(now)) + "|" +
                                     std::to_string(++manual_counter_))
                      .substr(0, 16);
  model::TriggerGroup group = create_group(id, trigger.cause, model::expand_matrix(trigger, config_.jobs), now);
  deps_.store->append_audit({{"type", "manual_trigger"},
                             {"actor", actor},
                             {"job", job_name},
                             {"sha", full},
                             {"event_id", group.event_id},
                             {"time", to_epoch_ms(now)}});
  return group;
}

model::TriggerGroup Scheduler::relaunch(BuildId id, const std::string& actor, Timestamp now) {
  const BuildRecord* r = find(id);
  if (!r) throw Error(Errc::UnknownBuild, std::to_string(id));
  Build cell;
  cell.job_name = r->build.job_name;
  cell.platform = r->build.platform;
  cell.version = r->build.version;
  cell.commit = r->build.commit;
  const std::string event =
      "relaunch-" + crypto::sha256_hex(std::to_string(id) + "|" + std::to_string(to_epoch_ms(now)) +
                                       "|" + std::to_string(++manual_counter_))
                        .substr(0, 16);
  model::TriggerGroup group = create_group(event, model::TriggerCause::kManual, {cell}, now);
  deps_.store->append_audit({{"type", "relaunch"},
                             {"actor", actor},
                             {"build_id", id},
                             {"event_id", group.event_id},
                             {"time", to_epoch_ms(now)}});
  return group;
}

AgentInfo* Scheduler::agent_by_link(std::uint64_t link_id) {
  for (auto& [name, a] : agents_) {
    if (a.link && a.link->id() == link_id) return &a;
  }
  return nullptr;
}

AgentInfo* Scheduler::agent_with_build(BuildId id) {
  for (auto& [name, a] : agents_) {
    if (a.build == id) return &a;
  }
  return nullptr;
}

bool Scheduler::agent_hello(std::shared_ptr<AgentLink> link, const protocol::AgentHello& hello,
                            Timestamp now) {
  protocol::HandshakePolicy policy;
  policy.agents = config_.agents;
  policy.ack.heartbeat_interval_ms = config_.heartbeat_interval.count();
  policy.ack.heartbeat_timeout_ms = config_.heartbeat_timeout.count();
  const protocol::WireMessage reply = protocol::handshake(hello, policy);
  try {
    link->send(reply.kind, reply.body);
  } catch (const Error&) {
    return false;
  }
  if (reply.kind != protocol::MessageKind::kHelloAck) return false;

  if (auto it = agents_.find(hello.agent_name); it != agents_.end()) {
    AgentInfo& old = it->second;
    if (old.link && old.link->id() != link->id()) {
      // Superseded: the previous connection and its build are gone.
      lose_agent(old, now);
    }
  }
  AgentInfo& a = agents_[hello.agent_name];
  a.name = hello.agent_name;
  a.platform = hello.platform;
  a.state = AgentState::kIdle;
  a.build.reset();
  a.last_seen = now;
  a.hello = hello;
  a.link = std::move(link);
  return true;
}

void Scheduler::lose_agent(AgentInfo& agent, Timestamp now) {
  agent.state = AgentState::kLost;
  if (agent.link) {
    agent.link->close();
    agent.link.reset();
  }
  if (agent.build) {
    const BuildId id = *agent.build;
    agent.build.reset();
    auto it = builds_.find(id);
    if (it != builds_.end() && it->second.build.state == BuildState::kRunning) {
      finish(it->second, BuildState::kFailure, 1, "agent_lost", now);
    }
  }
}

void Scheduler::agent_message(std::uint64_t link_id, const protocol::WireMessage& msg,
                              Timestamp now) {
  AgentInfo* agent = agent_by_link(link_id);
  if (!agent) return;  // stale connection
  agent->last_seen = now;
  using protocol::MessageKind;
  switch (msg.kind) {
    case MessageKind::kHeartbeat:
    case MessageKind::kAccept:
      return;
    case MessageKind::kLogChunk: {
      const protocol::LogChunk chunk = protocol::chunk_from_json(msg.body);
      if (agent->build != chunk.build_id) return;
      chunks_.observe(chunk.build_id, chunk.chunk_index);
      const Build& b = builds_.at(chunk.build_id).build;
      deps_.store->append_log(b.job_name, b.number, chunk.bytes);
      Progress& p = progress_[chunk.build_id];
      p.bytes += chunk.bytes.size();
      ++p.chunks;
      return;
    }
    case MessageKind::kResult: {
      const protocol::BuildResult result = protocol::result_from_json(msg.body);
      if (agent->build != result.build_id) return;
      const Progress p = progress_[result.build_id];
      const bool complete = p.chunks == result.chunk_count && p.bytes == result.log_bytes;
      record_result(result.build_id, result.exit_code, complete, now, result.cause);
      return;
    }
    case MessageKind::kError: {
      const protocol::ErrorBody e = protocol::error_from_json(msg.body);
      std::cerr << "forgeci: agent " << agent->name << " reported " << e.error << ": "
                << e.detail << '\n';
      return;
    }
    default:
      throw Error(Errc::MalformedFrame,
                  "agents may not send " + std::string(protocol::to_string(msg.kind)));
  }
}

void Scheduler::agent_disconnected(std::uint64_t link_id, Timestamp now) {
  if (AgentInfo* a = agent_by_link(link_id)) lose_agent(*a, now);
}

std::vector<std::string> Scheduler::check_heartbeats(Timestamp now) {
  std::vector<std::string> lost;
  for (auto& [name, a] : agents_) {
    if (a.state == AgentState::kLost) continue;
    if (now - a.last_seen > config_.heartbeat_timeout) {
      lose_agent(a, now);
      lost.push_back(name);
    }
  }
  return lost;
}

std::optional<protocol::Assignment> Scheduler::assignment_for(BuildRecord& r, Timestamp now) {
  Build& b = r.build;
  const model::JobDefinition* job = config_.find_job(b.job_name);
  std::variant<pipeline::PipelineSpec, std::string> spec = std::string("job no longer configured");
  if (job) {
    const auto key = std::make_pair(job->pipeline_path, b.commit.sha);
    auto it = pipeline_cache_.find(key);
    if (it == pipeline_cache_.end()) {
      try {
        if (!deps_.pipeline_source) throw Error(Errc::IoError, "no pipeline source");
        spec = pipeline::parse_pipeline(deps_.pipeline_source(*job, b.commit));
      } catch (const Error& e) {
        spec = std::string(e.what());
      }
      it = pipeline_cache_.emplace(key, spec).first;
    }
    spec = it->second;
  }

  protocol::Assignment a;
  a.build_id = b.id;
  a.job_name = b.job_name;
  a.build_number = b.number;
  a.version = b.version;
  a.platform = b.platform;
  a.commit = b.commit;
  a.bindings = {{"ARCH", b.platform.value},
                {"MATLAB_VER", b.version.value},
                {"BUILD_ID", std::to_string(b.id)},
                {"BUILD_NUMBER", std::to_string(b.number)},
                {"JOB_NAME", b.job_name},
                {"GIT_COMMIT", b.commit.sha}};
  if (const auto* s = std::get_if<pipeline::PipelineSpec>(&spec)) {
    try {
      a.hudson_script = pipeline::generate_hudson_script(*s, a.bindings);
      return a;
    } catch (const Error& e) {
      spec = std::string(e.what());
    }
  }
  const std::string why = std::get<std::string>(spec);
  deps_.store->append_log(b.job_name, b.number, "pipeline error: " + why + "\n");
  finish(r, BuildState::kFailure, 1, "pipeline_error", now);
  return std::nullopt;
}

std::vector<std::pair<std::string, protocol::Assignment>> Scheduler::dispatch(Timestamp now) {
  std::vector<std::pair<std::string, protocol::Assignment>> out;
  for (auto& [name, agent] : agents_) {
    if (agent.state != AgentState::kIdle || !agent.link) continue;
    auto q = queues_.find(agent.platform);
    if (q == queues_.end()) continue;
    while (!q->second.empty()) {
      const BuildId id = q->second.front();
      q->second.pop_front();
      BuildRecord& r = builds_.at(id);
      r.build.state = BuildState::kRunning;
      r.build.started = now;
      r.agent = name;
      auto assignment = assignment_for(r, now);
      if (!assignment) continue;
      agent.state = AgentState::kBusy;
      agent.build = id;
      persist(r);
      try {
        agent.link->send(protocol::MessageKind::kAssign, protocol::to_json(*assignment));
      } catch (const Error&) {
        lose_agent(agent, now);
        break;
      }
      publish(r.build, "Running on " + name);
      out.emplace_back(name, std::move(*assignment));
      break;
    }
  }
  return out;
}

void Scheduler::finish(BuildRecord& r, BuildState state, std::optional<int> exit_code,
                       std::string cause, Timestamp now) {
  Build& b = r.build;
  if (!model::can_transition(b.state, state)) {
    throw Error(Errc::NotRunning, "build " + std::to_string(b.id) + " is " +
                                      std::string(model::to_string(b.state)));
  }
  b.state = state;
  b.exit_code = state == BuildState::kAborted ? std::nullopt : exit_code;
  if (!b.started) b.started = now;
  b.finished = now;
  b.failure_cause = std::move(cause);
  if (AgentInfo* a = agent_with_build(b.id)) {
    a->build.reset();
    if (a->state == AgentState::kBusy) a->state = AgentState::kIdle;
  }
  abort_requested_.erase(b.id);
  progress_.erase(b.id);
  chunks_.forget(b.id);
  persist(r);

  std::string description;
  switch (state) {
    case BuildState::kSuccess:
      description = "Passed in " + std::to_string(b.duration_ms() / 1000) + "s";
      break;
    case BuildState::kFailure:
      description = b.failure_cause.empty()
                        ? "Failed with exit code " + std::to_string(*b.exit_code)
                        : "Failed: " + b.failure_cause;
      break;
    default:
      description = "Aborted";
  }
  publish(b, description);

  if (state == BuildState::kFailure && deps_.notify) {
    status::Notification n;
    n.build_id = b.id;
    n.job_name = b.job_name;
    n.platform = b.platform.value;
    n.version = b.version.value;
    n.sha = b.commit.sha;
    n.exit_code = b.exit_code.value_or(1);
    n.cause = b.failure_cause;
    n.console_url = config_.resolved_public_url() + console_path(b);
    deps_.notify->notify(n);
  }
  std::size_t ignored = 0;
  prune_job(b.job_name, config_.retention, &ignored);
}

Build Scheduler::record_result(BuildId id, int exit_code, bool log_complete, Timestamp now,
                               const std::string& cause) {
  auto it = builds_.find(id);
  if (it == builds_.end()) throw Error(Errc::UnknownBuild, std::to_string(id));
  BuildRecord& r = it->second;
  if (r.build.state != BuildState::kRunning) {
    throw Error(Errc::NotRunning, "build " + std::to_string(id) + " is " +
                                      std::string(model::to_string(r.build.state)));
  }
  r.log_complete = log_complete;
  if (abort_requested_.contains(id)) {
    finish(r, BuildState::kAborted, std::nullopt, "aborted", now);
  } else if (exit_code == 0) {
    finish(r, BuildState::kSuccess, 0, "", now);
  } else {
    finish(r, BuildState::kFailure, exit_code, cause, now);
  }
  return r.build;
}

Build Scheduler::abort(BuildId id, Timestamp now) {
  auto it = builds_.find(id);
  if (it == builds_.end()) throw Error(Errc::UnknownBuild, std::to_string(id));
  BuildRecord& r = it->second;
  if (r.build.state == BuildState::kPending) {
    auto& q = queues_[r.build.platform];
    q.erase(std::remove(q.begin(), q.end(), id), q.end());
    finish(r, BuildState::kAborted, std::nullopt, "aborted", now);
  } else if (r.build.state == BuildState::kRunning) {
    abort_requested_.insert(id);
    if (AgentInfo* a = agent_with_build(id); a && a->link) {
      try {
        a->link->send(protocol::MessageKind::kCancel, {{"build_id", id}});
      } catch (const Error&) {
        lose_agent(*a, now);
      }
    }
  } else {
    throw Error(Errc::NotRunning, "build " + std::to_string(id) + " already finished");
  }
  return r.build;
}

void Scheduler::prune_job(const std::string& job, std::size_t keep_last, std::size_t* count) {
  std::vector<BuildRecord*> mine;
  for (auto& [id, r] : builds_) {
    if (r.build.job_name == job) mine.push_back(&r);
  }
  std::sort(mine.begin(), mine.end(),
            [](const BuildRecord* a, const BuildRecord* b) { return a->build.number > b->build.number; });
  for (std::size_t i = keep_last; i < mine.size(); ++i) {
    BuildRecord& r = *mine[i];
    if (r.log_pruned || !model::is_terminal(r.build.state)) continue;
    deps_.store->delete_log(r.build.job_name, r.build.number);
    r.log_pruned = true;
    persist(r);
    ++*count;
  }
}

std::size_t Scheduler::prune_retention(std::size_t keep_last) {
  if (keep_last == 0) throw Error(Errc::InvalidArgument, "keep_last must be at least 1");
  std::set<std::string> jobs;
  for (const auto& [id, r] : builds_) jobs.insert(r.build.job_name);
  std::size_t count = 0;
  for (const auto& job : jobs) prune_job(job, keep_last, &count);
  return count;
}

ReloadResult Scheduler::maintenance_reload(Timestamp now, const ConfigLoader& loader) {
  const Timestamp due = last_maintenance_instant(now, config_.maintenance_hour,
                                                 config_.maintenance_minute);
  if (last_reload_ >= due) return {false, "not-due"};
  for (const auto& [id, r] : builds_) {
    if (r.build.state == BuildState::kRunning) return {false, "busy"};
  }
  config::MasterConfig fresh = loader();  // ConfigInvalid leaves everything untouched
  config_ = std::move(fresh);
  pipeline_cache_.clear();
  last_reload_ = now;
  deps_.store->append_audit({{"type", "reload"}, {"time", to_epoch_ms(now)}});
  return {true, "reloaded"};
}

TrendSeries Scheduler::build_time_trend(const std::string& job_name) const {
  const bool known = config_.find_job(job_name) != nullptr ||
                     std::any_of(builds_.begin(), builds_.end(),
                                 [&](const auto& kv) { return kv.second.build.job_name == job_name; });
  if (!known) throw Error(Errc::NoSuchJob, job_name);
  TrendSeries series{job_name, {}};
  for (const auto& [id, r] : builds_) {
    const Build& b = r.build;
    if (b.job_name != job_name || !model::is_terminal(b.state) || !b.finished) continue;
    series.points.push_back({b.id, b.number, b.duration_ms(), b.state});
  }
  return series;
}

status::CommitStatus Scheduler::override_status(const std::string& sha, const std::string& context,
                                                status::StatusState state, const std::string& actor,
                                                Timestamp now) {
  std::vector<status::AuditEntry> audit;
  status::CommitStatus st =
      status::override_status(*deps_.vcs, sha, context, state, actor, config_.admins, audit, now);
  for (const auto& a : audit) {
    deps_.store->append_audit({{"type", "override"},
                               {"actor", a.actor},
                               {"sha", a.sha},
                               {"context", a.context},
                               {"old", status::to_string(a.old_state)},
                               {"new", status::to_string(a.new_state)},
                               {"time", to_epoch_ms(a.time)}});
  }
  return st;
}

const BuildRecord* Scheduler::find(BuildId id) const {
  auto it = builds_.find(id);
  return it == builds_.end() ? nullptr : &it->second;
}

const BuildRecord* Scheduler::find(const std::string& job, std::uint64_t number) const {
  auto it = by_number_.find({job, number});
  return it == by_number_.end() ? nullptr : find(it->second);
}

std::vector<const BuildRecord*> Scheduler::builds_for_sha(const std::string& sha) const {
  std::vector<const BuildRecord*> out;
  for (const auto& [id, r] : builds_) {
    if (r.build.commit.sha == sha) out.push_back(&r);
  }
  return out;
}

std::optional<model::TriggerGroup> Scheduler::group(const std::string& event_id) const {
  auto it = groups_.find(event_id);
  if (it == groups_.end()) return std::nullopt;
  return it->second;
}

std::optional<model::TriggerGroup> Scheduler::latest_branch_group(const std::string& branch) const {
  for (auto it = group_order_.rbegin(); it != group_order_.rend(); ++it) {
    const model::TriggerGroup& g = groups_.at(*it);
    if (g.cause == model::TriggerCause::kBranchPush && g.commit.branch == branch) return g;
  }
  return std::nullopt;
}

std::vector<AgentInfo> Scheduler::agents() const {
  std::vector<AgentInfo> out;
  for (const auto& [name, a] : agents_) out.push_back(a);
  return out;
}

std::vector<BuildId> Scheduler::queue(const model::PlatformLabel& platform) const {
  auto it = queues_.find(platform);
  if (it == queues_.end()) return {};
  return {it->second.begin(), it->second.end()};
}

status::PlatformStatusMatrix Scheduler::matrix(const std::string& sha) const {
  std::vector<status::Cell> expected;
  for (const BuildRecord* r : builds_for_sha(sha)) {
    expected.emplace_back(r->build.platform, r->build.version);
  }
  return status::aggregate(sha, deps_.vcs->list(sha), expected);
}

status::StatusState Scheduler::badge_state(const model::PlatformLabel& platform) const {
  const auto g = latest_branch_group(config_.badge_branch);
  if (!g) return status::StatusState::kPending;
  std::vector<status::StatusState> states;
  for (BuildId id : g->builds) {
    const Build& b = builds_.at(id).build;
    if (b.platform == platform) states.push_back(status::status_of(b.state));
  }
  return status::combine(states);
}

std::string Scheduler::check_invariants() const {
  std::map<BuildId, int> queued, busy;
  for (const auto& [platform, q] : queues_) {
    BuildId last = 0;
    for (BuildId id : q) {
      ++queued[id];
      if (id <= last) return "queue of " + platform.value + " is out of FIFO order";
      last = id;
      auto it = builds_.find(id);
      if (it == builds_.end()) return "queued unknown build " + std::to_string(id);
      if (it->second.build.platform != platform) return "build queued on the wrong platform";
    }
  }
  for (const auto& [name, a] : agents_) {
    if (a.build) {
      ++busy[*a.build];
      if (a.state != AgentState::kBusy) return "agent " + name + " holds a build while not busy";
    } else if (a.state == AgentState::kBusy) {
      return "agent " + name + " is busy without a build";
    }
  }
  std::size_t pending = 0, running = 0, terminal = 0;
  for (const auto& [id, r] : builds_) {
    const int q = queued.count(id) ? queued.at(id) : 0;
    const int s = busy.count(id) ? busy.at(id) : 0;
    const std::string tag = "build " + std::to_string(id) + ": ";
    switch (r.build.state) {
      case BuildState::kPending:
        ++pending;
        if (q != 1 || s != 0) return tag + "Pending but not queued exactly once";
        break;
      case BuildState::kRunning:
        ++running;
        if (q != 0 || s != 1) return tag + "Running but not held by exactly one agent";
        break;
      default:
        ++terminal;
        if (q != 0 || s != 0) return tag + "terminal but still queued or held";
        if (!r.build.consistent()) return tag + "inconsistent exit code";
    }
  }
  if (pending + running + terminal != builds_.size()) return "conservation violated";
  return {};
}

}  // namespace forgeci::master
