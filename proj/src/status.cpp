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

#include "forgeci/status.hpp"

#include <algorithm>
#include <fstream>
#include <thread>

#include "forgeci/error.hpp"
#include "forgeci/text.hpp"
#include "json.hpp"

namespace forgeci::status {

using json = nlohmann::json;

std::string_view to_string(StatusState state) {
  switch (state) {
    case StatusState::kPending: return "pending";
    case StatusState::kSuccess: return "success";
    case StatusState::kFailure: return "failure";
  }
  return "";
}

std::optional<StatusState> parse_status_state(std::string_view s) {
  for (auto st : {StatusState::kPending, StatusState::kSuccess, StatusState::kFailure}) {
    if (to_string(st) == s) return st;
  }
  return std::nullopt;
}

StatusState status_of(model::BuildState state) {
  switch (state) {
    case model::BuildState::kPending:
    case model::BuildState::kRunning:
      return StatusState::kPending;
    case model::BuildState::kSuccess:
      return StatusState::kSuccess;
    case model::BuildState::kFailure:
    case model::BuildState::kAborted:
      return StatusState::kFailure;
  }
  return StatusState::kPending;
}

std::string make_context(std::string_view job_name, const model::RuntimeVersion& version,
                         const model::PlatformLabel& platform) {
  std::string ctx = "ci/";
  ctx += job_name;
  ctx += '/';
  ctx += version.value;
  ctx += '/';
  ctx += platform.value;
  return ctx;
}

ParsedContext parse_context(std::string_view context) {
  const auto parts = text::split(context, '/');
  if (parts.size() != 4 || parts[0] != "ci" ||
      std::any_of(parts.begin() + 1, parts.end(),
                  [](const std::string& p) { return p.empty(); })) {
    throw Error(Errc::MalformedContext, std::string(context));
  }
  return ParsedContext{parts[1], {parts[2]}, {parts[3]}};
}

std::string resolve_against(std::string_view abbreviated,
                            const std::set<std::string>& known) {
  if (model::is_full_sha(abbreviated)) return std::string(abbreviated);
  if (!model::is_abbreviated_sha(abbreviated)) {
    throw Error(Errc::BadSha, "'" + std::string(abbreviated) +
                                  "' is not 7-40 lowercase hex characters");
  }
  std::string match;
  for (const std::string& sha : known) {
    if (sha.starts_with(abbreviated)) {
      if (!match.empty()) {
        throw Error(Errc::BadSha, "ambiguous prefix " + std::string(abbreviated));
      }
      match = sha;
    }
  }
  if (match.empty()) {
    throw Error(Errc::BadSha, "unknown commit " + std::string(abbreviated));
  }
  return match;
}

void InMemoryStatusClient::set(const CommitStatus& status) {
  std::lock_guard lock(mu_);
  store_[status.sha][status.context] = status;
  commits_.insert(status.sha);
  ++writes_;
}

std::vector<CommitStatus> InMemoryStatusClient::list(const std::string& sha) {
  std::lock_guard lock(mu_);
  std::vector<CommitStatus> out;
  auto it = store_.find(sha);
  if (it == store_.end()) return out;
  for (const auto& [ctx, st] : it->second) out.push_back(st);
  return out;
}

std::string InMemoryStatusClient::resolve_sha(std::string_view abbreviated) {
  std::lock_guard lock(mu_);
  return resolve_against(abbreviated, commits_);
}

void InMemoryStatusClient::register_commit(const std::string& sha) {
  std::lock_guard lock(mu_);
  commits_.insert(sha);
}

std::size_t InMemoryStatusClient::write_count() const {
  std::lock_guard lock(mu_);
  return writes_;
}

FileStatusClient::FileStatusClient(std::filesystem::path path) : path_(std::move(path)) {}

void FileStatusClient::set(const CommitStatus& status) {
  std::lock_guard lock(mu_);
  std::ofstream out(path_, std::ios::app | std::ios::binary);
  if (!out) throw Error(Errc::TransientClientError, "cannot open " + path_.string());
  json j = {{"sha", status.sha},
            {"context", status.context},
            {"state", to_string(status.state)},
            {"target_url", status.target_url},
            {"description", status.description}};
  out << j.dump() << '\n';
  out.flush();
  if (!out) throw Error(Errc::TransientClientError, "write failed: " + path_.string());
}

std::vector<CommitStatus> FileStatusClient::list(const std::string& sha) {
  std::lock_guard lock(mu_);
  std::map<std::string, CommitStatus> latest;
  std::ifstream in(path_, std::ios::binary);
  std::string line;
  while (std::getline(in, line)) {
    json j = json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object() || j.value("sha", "") != sha) continue;
    auto state = parse_status_state(j.value("state", ""));
    if (!state) continue;
    CommitStatus st{sha, j.value("context", ""), *state, j.value("target_url", ""),
                    j.value("description", "")};
    latest[st.context] = std::move(st);
  }
  std::vector<CommitStatus> out;
  for (auto& [ctx, st] : latest) out.push_back(std::move(st));
  return out;
}

std::string FileStatusClient::resolve_sha(std::string_view abbreviated) {
  std::lock_guard lock(mu_);
  std::set<std::string> known = commits_;
  std::ifstream in(path_, std::ios::binary);
  std::string line;
  while (std::getline(in, line)) {
    json j = json::parse(line, nullptr, false);
    if (!j.is_discarded() && j.is_object()) known.insert(j.value("sha", ""));
  }
  return resolve_against(abbreviated, known);
}

void FileStatusClient::register_commit(const std::string& sha) {
  std::lock_guard lock(mu_);
  commits_.insert(sha);
}

Acknowledgment set_status(VcsStatusClient& client, const CommitStatus& status,
                          const RetryPolicy& policy) {
  auto delay = policy.base_delay;
  for (int attempt = 1;; ++attempt) {
    try {
      client.set(status);
      return Acknowledgment{attempt};
    } catch (const Error& e) {
      if (e.code() != Errc::TransientClientError) {
        throw Error(Errc::PermanentClientError, e.what());
      }
      if (attempt > policy.max_retries) {
        throw Error(Errc::PermanentClientError,
                    "gave up after " + std::to_string(attempt) + " attempts: " + e.what());
      }
    }
    if (policy.sleep) {
      policy.sleep(delay);
    } else {
      std::this_thread::sleep_for(delay);
    }
    delay *= 2;
  }
}

StatusState combine(const std::vector<StatusState>& states) {
  if (states.empty()) return StatusState::kPending;
  bool all_success = true;
  for (StatusState s : states) {
    if (s == StatusState::kFailure) return StatusState::kFailure;
    if (s != StatusState::kSuccess) all_success = false;
  }
  return all_success ? StatusState::kSuccess : StatusState::kPending;
}

PlatformStatusMatrix aggregate(const std::string& sha,
                               const std::vector<CommitStatus>& statuses,
                               const std::vector<Cell>& expected) {
  std::map<Cell, std::vector<StatusState>> evidence;
  for (const Cell& cell : expected) evidence[cell];
  for (const CommitStatus& st : statuses) {
    const ParsedContext ctx = parse_context(st.context);
    evidence[{ctx.platform, ctx.version}].push_back(st.state);
  }

  PlatformStatusMatrix m;
  m.sha = sha;
  std::map<model::PlatformLabel, std::vector<StatusState>> by_platform;
  for (const auto& [cell, states] : evidence) {
    const StatusState s = combine(states);  // no evidence -> pending
    m.cells[cell] = s;
    by_platform[cell.first].push_back(s);
  }
  std::vector<StatusState> platform_states;
  for (const auto& [platform, states] : by_platform) {
    const StatusState s = combine(states);
    m.per_platform[platform] = s;
    platform_states.push_back(s);
  }
  m.global = combine(platform_states);
  return m;
}

std::string_view badge_text(StatusState state) {
  switch (state) {
    case StatusState::kSuccess: return "passing";
    case StatusState::kFailure: return "failing";
    case StatusState::kPending: return "pending";
  }
  return "";
}

std::string_view badge_color(StatusState state) {
  switch (state) {
    case StatusState::kSuccess: return "#4c1";
    case StatusState::kFailure: return "#e05d44";
    case StatusState::kPending: return "#dfb317";
  }
  return "";
}

namespace {

std::string xml_escape(std::string_view s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      case '\'': out += "&apos;"; break;
      default: out += c;
    }
  }
  return out;
}

// Approximate Verdana 11px advance; good enough for a flat badge.
int text_width(std::string_view s) { return static_cast<int>(s.size()) * 7 + 10; }

}  // namespace

Badge render_badge(const model::PlatformLabel& platform, StatusState state) {
  const std::string label = xml_escape(platform.value);
  const std::string_view message = badge_text(state);
  const std::string_view color = badge_color(state);
  const int lw = text_width(platform.value);
  const int rw = text_width(message);
  const int w = lw + rw;
  const std::string ws = std::to_string(w);

  std::string svg;
  svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + ws +
         "\" height=\"20\" role=\"img\" aria-label=\"" + label + ": " +
         std::string(message) + "\">";
  svg += "<title>" + label + ": " + std::string(message) + "</title>";
  svg += "<linearGradient id=\"s\" x2=\"0\" y2=\"100%\">"
         "<stop offset=\"0\" stop-color=\"#bbb\" stop-opacity=\".1\"/>"
         "<stop offset=\"1\" stop-opacity=\".1\"/></linearGradient>";
  svg += "<clipPath id=\"r\"><rect width=\"" + ws +
         "\" height=\"20\" rx=\"3\" fill=\"#fff\"/></clipPath>";
  svg += "<g clip-path=\"url(#r)\">";
  svg += "<rect width=\"" + std::to_string(lw) + "\" height=\"20\" fill=\"#555\"/>";
  svg += "<rect x=\"" + std::to_string(lw) + "\" width=\"" + std::to_string(rw) +
         "\" height=\"20\" fill=\"" + std::string(color) + "\"/>";
  svg += "<rect width=\"" + ws + "\" height=\"20\" fill=\"url(#s)\"/>";
  svg += "</g>";
  svg += "<g fill=\"#fff\" text-anchor=\"middle\" "
         "font-family=\"Verdana,Geneva,DejaVu Sans,sans-serif\" font-size=\"11\">";
  svg += "<text x=\"" + std::to_string(lw / 2) + "\" y=\"14\">" + label + "</text>";
  svg += "<text x=\"" + std::to_string(lw + rw / 2) + "\" y=\"14\">" +
         std::string(message) + "</text>";
  svg += "</g></svg>\n";
  return Badge{platform, state, std::move(svg)};
}

CommitStatus override_status(VcsStatusClient& client, const std::string& sha,
                             const std::string& context, StatusState state,
                             const std::string& actor,
                             const std::set<std::string>& admins,
                             std::vector<AuditEntry>& audit, model::Timestamp now) {
  if (!admins.contains(actor)) throw Error(Errc::Unauthorized, actor);
  try {
    parse_context(context);
  } catch (const Error&) {
    throw Error(Errc::UnknownContext, context);
  }
  const auto existing = client.list(sha);
  auto it = std::find_if(existing.begin(), existing.end(),
                         [&](const CommitStatus& s) { return s.context == context; });
  if (it == existing.end()) throw Error(Errc::UnknownContext, context);

  CommitStatus updated = *it;
  updated.state = state;
  updated.description = "manually set by " + actor;
  set_status(client, updated);
  audit.push_back(AuditEntry{actor, sha, context, it->state, state, now});
  return updated;
}

void RecordingSink::notify(const Notification& n) {
  std::lock_guard lock(mu_);
  seen_.push_back(n);
}

std::vector<Notification> RecordingSink::notifications() const {
  std::lock_guard lock(mu_);
  return seen_;
}

void StreamSink::notify(const Notification& n) {
  std::lock_guard lock(mu_);
  out_ << "build failure: " << n.job_name << " #" << n.build_id << " (" << n.platform
       << ", " << n.version << ") sha " << n.sha << " exit " << n.exit_code;
  if (!n.cause.empty()) out_ << " cause " << n.cause;
  if (!n.console_url.empty()) out_ << " " << n.console_url;
  out_ << '\n';
  out_.flush();
}

}  // namespace forgeci::status
