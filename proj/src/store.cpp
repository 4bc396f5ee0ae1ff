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


#include "forgeci/store.hpp"

#include <algorithm>
#include <fstream>

#include "forgeci/error.hpp"
#include "forgeci/protocol.hpp"

namespace forgeci::master {

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

json optional_time(const std::optional<model::Timestamp>& t) {
  return t ? json(to_epoch_ms(*t)) : json(nullptr);
}

std::optional<model::Timestamp> time_from(const json& j, const char* key) {
  if (!j.contains(key) || j[key].is_null()) return std::nullopt;
  return from_epoch_ms(j[key].get<std::int64_t>());
}

void append_line(const fs::path& path, const json& j) {
  std::ofstream out(path, std::ios::app | std::ios::binary);
  out << j.dump() << '\n';
  if (!out) throw Error(Errc::IoError, "cannot append to " + path.string());
}

std::vector<json> read_lines(const fs::path& path) {
  std::vector<json> out;
  std::ifstream in(path, std::ios::binary);
  std::string line;
  while (std::getline(in, line)) {
    json j = json::parse(line, nullptr, false);
    if (!j.is_discarded()) out.push_back(std::move(j));
  }
  return out;
}

}  // namespace

std::int64_t to_epoch_ms(model::Timestamp t) {
  return std::chrono::duration_cast<std::chrono::milliseconds>(t.time_since_epoch()).count();
}

model::Timestamp from_epoch_ms(std::int64_t ms) {
  return model::Timestamp(std::chrono::duration_cast<model::Clock::duration>(
      std::chrono::milliseconds(ms)));
}

json to_json(const BuildRecord& r) {
  const model::Build& b = r.build;
  return {{"id", b.id},
          {"number", b.number},
          {"job", b.job_name},
          {"platform", b.platform.value},
          {"version", b.version.value},
          {"commit", protocol::to_json(b.commit)},
          {"state", model::to_string(b.state)},
          {"exit_code", b.exit_code ? json(*b.exit_code) : json(nullptr)},
          {"started", optional_time(b.started)},
          {"finished", optional_time(b.finished)},
          {"log_ref", b.log_ref},
          {"failure_cause", b.failure_cause},
          {"duration_ms", b.duration_ms()},
          {"agent", r.agent},
          {"log_complete", r.log_complete},
          {"log_pruned", r.log_pruned}};
}

BuildRecord record_from_json(const json& j) {
  try {
    BuildRecord r;
    model::Build& b = r.build;
    b.id = j.at("id").get<model::BuildId>();
    b.number = j.at("number").get<std::uint64_t>();
    b.job_name = j.at("job").get<std::string>();
    b.platform.value = j.at("platform").get<std::string>();
    b.version.value = j.at("version").get<std::string>();
    b.commit = protocol::commit_from_json(j.at("commit"));
    const auto state = model::parse_build_state(j.at("state").get<std::string>());
    if (!state) throw Error(Errc::MalformedPayload, "unknown state");
    b.state = *state;
    if (!j.at("exit_code").is_null()) b.exit_code = j["exit_code"].get<int>();
    b.started = time_from(j, "started");
    b.finished = time_from(j, "finished");
    b.log_ref = j.value("log_ref", std::string{});
    b.failure_cause = j.value("failure_cause", std::string{});
    r.agent = j.value("agent", std::string{});
    r.log_complete = j.value("log_complete", false);
    r.log_pruned = j.value("log_pruned", false);
    return r;
  } catch (const json::exception& e) {
    throw Error(Errc::MalformedPayload, e.what());
  }
}

json to_json(const model::TriggerGroup& g) {
  return {{"event_id", g.event_id},
          {"cause", model::to_string(g.cause)},
          {"commit", protocol::to_json(g.commit)},
          {"builds", g.builds}};
}

model::TriggerGroup group_from_json(const json& j) {
  try {
    model::TriggerGroup g;
    g.event_id = j.at("event_id").get<std::string>();
    const std::string cause = j.at("cause").get<std::string>();
    for (auto c : {model::TriggerCause::kBranchPush, model::TriggerCause::kPrUpdate,
                   model::TriggerCause::kManual}) {
      if (model::to_string(c) == cause) g.cause = c;
    }
    g.commit = protocol::commit_from_json(j.at("commit"));
    g.builds = j.at("builds").get<std::vector<model::BuildId>>();
    return g;
  } catch (const json::exception& e) {
    throw Error(Errc::MalformedPayload, e.what());
  }
}

BuildStore::BuildStore(fs::path root) : root_(std::move(root)) {
  std::error_code ec;
  fs::create_directories(root_ / "jobs", ec);
  if (ec) throw Error(Errc::IoError, "cannot create " + root_.string() + ": " + ec.message());
}

fs::path BuildStore::job_dir(const std::string& job) const { return root_ / "jobs" / job; }

fs::path BuildStore::log_path(const std::string& job, std::uint64_t number) const {
  return job_dir(job) / (std::to_string(number) + ".log");
}

void BuildStore::save(const BuildRecord& record) {
  if (!persistent()) return;
  std::lock_guard lock(mu_);
  const fs::path dir = job_dir(record.build.job_name);
  fs::create_directories(dir);
  append_line(dir / (std::to_string(record.build.number) + ".json"), to_json(record));
}

void BuildStore::save_group(const model::TriggerGroup& group) {
  if (!persistent()) return;
  std::lock_guard lock(mu_);
  append_line(root_ / "groups.jsonl", to_json(group));
}

void BuildStore::append_audit(const json& entry) {
  std::lock_guard lock(mu_);
  if (persistent()) {
    append_line(root_ / "audit.jsonl", entry);
  } else {
    memory_audit_.push_back(entry);
  }
}

std::vector<json> BuildStore::audit() const {
  std::lock_guard lock(mu_);
  return persistent() ? read_lines(root_ / "audit.jsonl") : memory_audit_;
}

void BuildStore::append_log(const std::string& job, std::uint64_t number, std::string_view bytes) {
  std::lock_guard lock(mu_);
  if (!persistent()) {
    memory_logs_[{job, number}].append(bytes);
    return;
  }
  fs::create_directories(job_dir(job));
  std::ofstream out(log_path(job, number), std::ios::app | std::ios::binary);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(Errc::IoError, "cannot append to " + log_path(job, number).string());
}

std::string BuildStore::read_log(const std::string& job, std::uint64_t number,
                                 std::uint64_t offset, std::size_t max) const {
  std::lock_guard lock(mu_);
  if (!persistent()) {
    auto it = memory_logs_.find({job, number});
    if (it == memory_logs_.end() || offset >= it->second.size()) return {};
    return it->second.substr(offset, max);
  }
  std::ifstream in(log_path(job, number), std::ios::binary);
  if (!in) return {};
  in.seekg(0, std::ios::end);
  const auto size = static_cast<std::uint64_t>(in.tellg());
  if (offset >= size) return {};
  const auto n = static_cast<std::size_t>(std::min<std::uint64_t>(size - offset, max));
  std::string out(n, '\0');
  in.seekg(static_cast<std::streamoff>(offset));
  in.read(out.data(), static_cast<std::streamsize>(n));
  out.resize(static_cast<std::size_t>(in.gcount()));
  return out;
}

std::uint64_t BuildStore::log_size(const std::string& job, std::uint64_t number) const {
  std::lock_guard lock(mu_);
  if (!persistent()) {
    auto it = memory_logs_.find({job, number});
    return it == memory_logs_.end() ? 0 : it->second.size();
  }
  std::error_code ec;
  const auto size = fs::file_size(log_path(job, number), ec);
  return ec ? 0 : size;
}

bool BuildStore::delete_log(const std::string& job, std::uint64_t number) {
  std::lock_guard lock(mu_);
  if (!persistent()) return memory_logs_.erase({job, number}) > 0;
  std::error_code ec;
  return fs::remove(log_path(job, number), ec);
}

BuildStore::Snapshot BuildStore::load() const {
  Snapshot snap;
  if (!persistent()) return snap;
  std::lock_guard lock(mu_);
  std::error_code ec;
  for (const auto& job : fs::directory_iterator(root_ / "jobs", ec)) {
    if (!job.is_directory()) continue;
    for (const auto& f : fs::directory_iterator(job.path(), ec)) {
      if (f.path().extension() != ".json") continue;
      const auto lines = read_lines(f.path());
      for (auto it = lines.rbegin(); it != lines.rend(); ++it) {
        try {
          snap.builds.push_back(record_from_json(*it));
          break;
        } catch (const Error&) {
          // Torn last line: fall back to the previous record.
        }
      }
    }
  }
  std::sort(snap.builds.begin(), snap.builds.end(),
            [](const auto& a, const auto& b) { return a.build.id < b.build.id; });
  for (const json& j : read_lines(root_ / "groups.jsonl")) {
    try {
      snap.groups.push_back(group_from_json(j));
    } catch (const Error&) {
    }
  }
  return snap;
}

}  // namespace forgeci::master
