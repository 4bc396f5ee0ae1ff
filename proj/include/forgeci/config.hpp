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


// Master and agent configuration files. Both use the pipeline dialect:
//
//   port: 7478
//   versions:
//     - R2016b
//   agents:
//     - linux-node linux
//   jobs:
//     - COBRAToolbox-pr-auto-linux pr_auto linux R2016b,R2017b branches=develop
//
// Relative paths resolve against the directory of the config file.

#ifndef FORGECI_CONFIG_HPP_
#define FORGECI_CONFIG_HPP_

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "forgeci/model.hpp"
#include "forgeci/protocol.hpp"

namespace forgeci::config {

struct MasterConfig {
  std::uint16_t port = protocol::kDefaultPort;
  std::uint16_t http_port = 8080;
  std::string bind = "0.0.0.0";
  std::string public_url;  // defaults to http://127.0.0.1:<http_port>

  std::filesystem::path state_dir;
  std::filesystem::path repo_path;
  std::string repo_id = "opencobra/cobratoolbox";
  std::string bot_account = "cobrabot";
  std::filesystem::path secret_path;
  std::string secret;  // contents of secret_path, trailing blanks removed

  std::size_t retention = 30;
  int maintenance_hour = 3;
  int maintenance_minute = 0;
  std::chrono::milliseconds heartbeat_interval{10'000};
  std::chrono::milliseconds heartbeat_timeout{30'000};
  std::string badge_branch = "develop";

  std::filesystem::path status_file;  // FileStatusClient; empty: in memory
  std::filesystem::path notify_file;  // failure notifications; empty: stderr
  std::filesystem::path ui_dir;       // static dashboard assets under /ui/

  std::vector<model::RuntimeVersion> versions = model::default_versions();
  std::map<std::string, model::PlatformLabel> agents;  // name -> platform
  std::vector<model::JobDefinition> jobs = model::default_job_table();
  model::CompatibilityMatrix compatibility;
  std::set<std::string> admins;

  std::string resolved_public_url() const;
  // Every platform some job runs on.
  std::set<model::PlatformLabel> platforms() const;
  const model::JobDefinition* find_job(std::string_view name) const;
};

// Throws Error{ConfigInvalid}.
MasterConfig parse_master_config(std::string_view text,
                                 const std::filesystem::path& base_dir = {});
MasterConfig load_master_config(const std::filesystem::path& path);

struct AgentConfig {
  std::string master_host = "127.0.0.1";
  std::uint16_t master_port = protocol::kDefaultPort;
  std::string agent_name;
  model::PlatformLabel platform;
  std::string install_dir;
  std::filesystem::path workspace_root;
  std::filesystem::path source_dir;  // local-directory fetcher
  std::string repo_url;              // git fetcher when source_dir is empty
  std::vector<std::string> unset_vars;
  int cores = 0;
  std::int64_t memory_mb = 0;
  std::string os_descriptor;
  std::chrono::milliseconds poll_interval{50};
  std::chrono::milliseconds reconnect_delay{1000};
};

AgentConfig parse_agent_config(std::string_view text,
                               const std::filesystem::path& base_dir = {});
AgentConfig load_agent_config(const std::filesystem::path& path);

}  // namespace forgeci::config

#endif  // FORGECI_CONFIG_HPP_
