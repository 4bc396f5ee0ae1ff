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


#include "forgeci/config.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <functional>
#include <sstream>

#include "forgeci/dialect.hpp"
#include "forgeci/error.hpp"
#include "forgeci/text.hpp"

namespace forgeci::config {

namespace fs = std::filesystem;

namespace {

[[noreturn]] void invalid(const dialect::Entry& e, const std::string& what) {
  throw Error(Errc::ConfigInvalid, "line " + std::to_string(e.line) + ": " + e.key + ": " + what);
}

const std::string& scalar(const dialect::Entry& e) {
  if (!e.scalar) invalid(e, "expects a single value");
  return *e.scalar;
}

std::vector<std::string> items(const dialect::Entry& e) {
  if (!e.is_sequence()) invalid(e, "expects a list");
  std::vector<std::string> out;
  for (const auto& item : e.items) out.push_back(item.text);
  return out;
}

template <typename Int>
Int to_int(const dialect::Entry& e, std::string_view s, Int lo, Int hi) {
  Int v{};
  const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size() || v < lo || v > hi) {
    invalid(e, "'" + std::string(s) + "' is not an integer in [" + std::to_string(lo) + ", " +
                   std::to_string(hi) + "]");
  }
  return v;
}

// "30" and "30s" are seconds, "500ms" milliseconds.
std::chrono::milliseconds to_duration(const dialect::Entry& e) {
  std::string_view s = scalar(e);
  if (s.ends_with("ms")) {
    return std::chrono::milliseconds(to_int<std::int64_t>(e, s.substr(0, s.size() - 2), 1, 86'400'000));
  }
  if (s.ends_with("s")) s.remove_suffix(1);
  return std::chrono::seconds(to_int<std::int64_t>(e, s, 1, 86'400));
}

fs::path to_path(const std::string& s, const fs::path& base) {
  fs::path p(s);
  return p.is_relative() && !base.empty() ? base / p : p;
}

std::vector<model::RuntimeVersion> to_versions(const dialect::Entry& e, std::string_view csv) {
  std::vector<model::RuntimeVersion> out;
  for (const auto& v : text::split(csv, ',')) {
    if (v.empty()) invalid(e, "empty version in '" + std::string(csv) + "'");
    out.push_back({v});
  }
  return out;
}

model::JobDefinition to_job(const dialect::Entry& e, const std::string& item) {
  const auto words = text::split_words(item);
  if (words.size() < 4) invalid(e, "job '" + item + "' needs: name trigger platform versions");
  model::JobDefinition job;
  job.name = std::string(words[0]);
  const auto trigger = model::parse_trigger_kind(words[1]);
  if (!trigger) invalid(e, "unknown trigger '" + std::string(words[1]) + "'");
  job.trigger = *trigger;
  job.platform = {std::string(words[2])};
  job.versions = to_versions(e, words[3]);
  for (std::size_t i = 4; i < words.size(); ++i) {
    const std::string_view w = words[i];
    if (w.starts_with("pipeline=")) {
      job.pipeline_path = std::string(w.substr(9));
    } else if (w.starts_with("branches=")) {
      job.watched_branches = text::split(w.substr(9), ',');
    } else {
      invalid(e, "unknown job option '" + std::string(w) + "'");
    }
  }
  return job;
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::ConfigInvalid, "cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

dialect::Document parse_doc(std::string_view text) {
  try {
    return dialect::parse(text);
  } catch (const Error& e) {
    throw Error(Errc::ConfigInvalid, e.what());
  }
}

using Handler = std::function<void(const dialect::Entry&)>;

void dispatch(const dialect::Document& doc, const std::map<std::string, Handler>& handlers) {
  for (const auto& entry : doc.entries) {
    auto it = handlers.find(entry.key);
    if (it == handlers.end()) invalid(entry, "unknown key");
    it->second(entry);
  }
}

}  // namespace

std::string MasterConfig::resolved_public_url() const {
  if (!public_url.empty()) return public_url;
  return "http://127.0.0.1:" + std::to_string(http_port);
}

std::set<model::PlatformLabel> MasterConfig::platforms() const {
  std::set<model::PlatformLabel> out;
  for (const auto& j : jobs) out.insert(j.platform);
  return out;
}

const model::JobDefinition* MasterConfig::find_job(std::string_view name) const {
  auto it = std::find_if(jobs.begin(), jobs.end(), [&](const auto& j) { return j.name == name; });
  return it == jobs.end() ? nullptr : &*it;
}

MasterConfig parse_master_config(std::string_view text, const fs::path& base_dir) {
  MasterConfig c;
  bool agents_given = false;
  const auto u16 = [](const dialect::Entry& e) {
    return to_int<std::uint16_t>(e, scalar(e), 0, 65535);
  };
  const std::map<std::string, Handler> handlers = {
      {"port", [&](const auto& e) { c.port = u16(e); }},
      {"http_port", [&](const auto& e) { c.http_port = u16(e); }},
      {"bind", [&](const auto& e) { c.bind = scalar(e); }},
      {"public_url", [&](const auto& e) { c.public_url = scalar(e); }},
      {"state_dir", [&](const auto& e) { c.state_dir = to_path(scalar(e), base_dir); }},
      {"repo_path", [&](const auto& e) { c.repo_path = to_path(scalar(e), base_dir); }},
      {"repo_id", [&](const auto& e) { c.repo_id = scalar(e); }},
      {"bot_account", [&](const auto& e) { c.bot_account = scalar(e); }},
      {"secret_path", [&](const auto& e) { c.secret_path = to_path(scalar(e), base_dir); }},
      {"retention",
       [&](const auto& e) { c.retention = to_int<std::size_t>(e, scalar(e), 1, 1'000'000); }},
      {"maintenance_time",
       [&](const auto& e) {
         const auto parts = text::split(scalar(e), ':');
         if (parts.size() != 2) invalid(e, "expects HH:MM");
         c.maintenance_hour = to_int<int>(e, parts[0], 0, 23);
         c.maintenance_minute = to_int<int>(e, parts[1], 0, 59);
       }},
      {"heartbeat_interval", [&](const auto& e) { c.heartbeat_interval = to_duration(e); }},
      {"heartbeat_timeout", [&](const auto& e) { c.heartbeat_timeout = to_duration(e); }},
      {"badge_branch", [&](const auto& e) { c.badge_branch = scalar(e); }},
      {"status_file", [&](const auto& e) { c.status_file = to_path(scalar(e), base_dir); }},
      {"notify_file", [&](const auto& e) { c.notify_file = to_path(scalar(e), base_dir); }},
      {"ui_dir", [&](const auto& e) { c.ui_dir = to_path(scalar(e), base_dir); }},
      {"versions",
       [&](const auto& e) {
         c.versions.clear();
         for (const auto& v : items(e)) c.versions.push_back({v});
       }},
      {"agents",
       [&](const auto& e) {
         agents_given = true;
         for (const auto& item : items(e)) {
           const auto w = text::split_words(item);
           if (w.size() != 2) invalid(e, "agent '" + item + "' needs: name platform");
           if (!c.agents.emplace(std::string(w[0]), model::PlatformLabel{std::string(w[1])})
                    .second) {
             invalid(e, "duplicate agent " + std::string(w[0]));
           }
         }
       }},
      {"jobs",
       [&](const auto& e) {
         c.jobs.clear();
         for (const auto& item : items(e)) c.jobs.push_back(to_job(e, item));
       }},
      {"compatibility",
       [&](const auto& e) {
         for (const auto& item : items(e)) {
           const auto w = text::split_words(item);
           if (w.size() != 4) {
             invalid(e, "entry '" + item + "' needs: platform version dependency version");
           }
           c.compatibility.declare({{std::string(w[0])}, {std::string(w[1])},
                                    std::string(w[2]), std::string(w[3])});
         }
       }},
      {"admins",
       [&](const auto& e) {
         for (const auto& a : items(e)) c.admins.insert(a);
       }},
  };
  dispatch(parse_doc(text), handlers);

  if (const std::string why = model::validate_jobs(c.jobs, c.versions); !why.empty()) {
    throw Error(Errc::ConfigInvalid, why);
  }
  if (!agents_given) {
    for (const auto& p : c.platforms()) c.agents.emplace(p.value, p);
  }
  if (c.heartbeat_timeout <= c.heartbeat_interval) {
    throw Error(Errc::ConfigInvalid, "heartbeat_timeout must exceed heartbeat_interval");
  }
  if (!c.secret_path.empty()) {
    c.secret = std::string(text::rtrim(read_text(c.secret_path)));
  }
  return c;
}

MasterConfig load_master_config(const fs::path& path) {
  return parse_master_config(read_text(path), path.parent_path());
}

AgentConfig parse_agent_config(std::string_view text, const fs::path& base_dir) {
  AgentConfig c;
  const std::map<std::string, Handler> handlers = {
      {"master_host", [&](const auto& e) { c.master_host = scalar(e); }},
      {"master_port",
       [&](const auto& e) { c.master_port = to_int<std::uint16_t>(e, scalar(e), 1, 65535); }},
      {"agent_name", [&](const auto& e) { c.agent_name = scalar(e); }},
      {"platform", [&](const auto& e) { c.platform = {scalar(e)}; }},
      {"install_dir", [&](const auto& e) { c.install_dir = scalar(e); }},
      {"workspace_root",
       [&](const auto& e) { c.workspace_root = to_path(scalar(e), base_dir); }},
      {"source_dir", [&](const auto& e) { c.source_dir = to_path(scalar(e), base_dir); }},
      {"repo_url", [&](const auto& e) { c.repo_url = scalar(e); }},
      {"unset_vars", [&](const auto& e) { c.unset_vars = items(e); }},
      {"cores", [&](const auto& e) { c.cores = to_int<int>(e, scalar(e), 0, 1 << 20); }},
      {"memory_mb",
       [&](const auto& e) { c.memory_mb = to_int<std::int64_t>(e, scalar(e), 0, 1LL << 40); }},
      {"os_descriptor", [&](const auto& e) { c.os_descriptor = scalar(e); }},
      {"poll_interval", [&](const auto& e) { c.poll_interval = to_duration(e); }},
      {"reconnect_delay", [&](const auto& e) { c.reconnect_delay = to_duration(e); }},
  };
  dispatch(parse_doc(text), handlers);
  if (c.agent_name.empty()) throw Error(Errc::ConfigInvalid, "agent_name is required");
  if (c.platform.value.empty()) throw Error(Errc::ConfigInvalid, "platform is required");
  if (c.workspace_root.empty()) throw Error(Errc::ConfigInvalid, "workspace_root is required");
  if (c.source_dir.empty() && c.repo_url.empty()) {
    throw Error(Errc::ConfigInvalid, "one of source_dir or repo_url is required");
  }
  return c;
}

AgentConfig load_agent_config(const fs::path& path) {
  return parse_agent_config(read_text(path), path.parent_path());
}

}  // namespace forgeci::config
