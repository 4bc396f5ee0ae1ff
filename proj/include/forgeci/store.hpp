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


// Append-only persistence for builds, trigger groups, logs and the audit
// trail. Layout below the state directory:
//
//   jobs/<job>/<number>.json   one JSON record per state change, last wins
//   jobs/<job>/<number>.log    raw console bytes
//   groups.jsonl               one line per trigger group
//   audit.jsonl                manual triggers, overrides, reloads
//
// A store constructed without a directory keeps everything in memory.

#ifndef FORGECI_STORE_HPP_
#define FORGECI_STORE_HPP_

#include <cstdint>
#include <filesystem>
#include <limits>
#include <map>
#include <mutex>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "forgeci/model.hpp"
#include "json.hpp"

namespace forgeci::master {

struct BuildRecord {
  model::Build build;
  std::string agent;
  bool log_complete = false;
  bool log_pruned = false;
};

nlohmann::json to_json(const BuildRecord& record);
BuildRecord record_from_json(const nlohmann::json& j);  // Throws Error{MalformedPayload}
nlohmann::json to_json(const model::TriggerGroup& group);
model::TriggerGroup group_from_json(const nlohmann::json& j);

std::int64_t to_epoch_ms(model::Timestamp t);
model::Timestamp from_epoch_ms(std::int64_t ms);

class BuildStore {
 public:
  BuildStore() = default;
  explicit BuildStore(std::filesystem::path root);

  bool persistent() const { return !root_.empty(); }

  void save(const BuildRecord& record);
  void save_group(const model::TriggerGroup& group);
  void append_audit(const nlohmann::json& entry);
  std::vector<nlohmann::json> audit() const;

  void append_log(const std::string& job, std::uint64_t number, std::string_view bytes);
  std::string read_log(const std::string& job, std::uint64_t number, std::uint64_t offset = 0,
                       std::size_t max = std::numeric_limits<std::size_t>::max()) const;
  std::uint64_t log_size(const std::string& job, std::uint64_t number) const;
  // Returns whether a log existed.
  bool delete_log(const std::string& job, std::uint64_t number);

  struct Snapshot {
    std::vector<BuildRecord> builds;  // by id
    std::vector<model::TriggerGroup> groups;
  };
  // Replays the state directory. Unreadable records are skipped.
  Snapshot load() const;

 private:
  std::filesystem::path job_dir(const std::string& job) const;
  std::filesystem::path log_path(const std::string& job, std::uint64_t number) const;

  mutable std::mutex mu_;
  std::filesystem::path root_;
  std::map<std::pair<std::string, std::uint64_t>, std::string> memory_logs_;
  std::vector<nlohmann::json> memory_audit_;
};

}  // namespace forgeci::master

#endif  // FORGECI_STORE_HPP_
