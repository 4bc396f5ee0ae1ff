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

// `travis.yml` parsing and generation of the executable build script (the
// "Hudson shell file") that agents run.

#ifndef FORGECI_PIPELINE_HPP_
#define FORGECI_PIPELINE_HPP_

#include <string>
#include <string_view>
#include <vector>

namespace forgeci::pipeline {

struct PipelineSpec {
  std::string language;
  std::vector<std::string> before_install;
  std::vector<std::string> script;

  // Non-empty phases, in execution order.
  std::size_t phase_count() const {
    return (before_install.empty() ? 0 : 1) + (script.empty() ? 0 : 1);
  }

  bool operator==(const PipelineSpec&) const = default;
};

// Keys are restricted to {language, before_install, script}.
// Throws Error{UnknownKey, MissingScriptPhase, IndentationError, EmptyCommand,
// DuplicateKey}.
PipelineSpec parse_pipeline(std::string_view text);

// Canonical dialect rendering; parse_pipeline(render_pipeline(s)) == s.
std::string render_pipeline(const PipelineSpec& spec);

// Content hash of the canonical rendering (16 hex chars).
std::string spec_hash(const PipelineSpec& spec);

struct EnvBinding {
  std::string name;
  std::string value;

  bool operator==(const EnvBinding&) const = default;
};

bool is_valid_binding_name(std::string_view name);

struct HudsonScript {
  std::string text;
  std::vector<EnvBinding> bindings;
  std::string spec_hash;

  // `hudson-<spec_hash>.sh`
  std::string file_name() const;
};

inline constexpr std::string_view kInterpreterLine = "#!/bin/sh";
inline constexpr std::string_view kFailFastLine = "set -e";

// Layout: interpreter line, fail-fast directive, one `export` per binding in
// the given order, then before_install and script commands.
// Throws Error{DuplicateBinding, InvalidBinding}.
HudsonScript generate_hudson_script(const PipelineSpec& spec,
                                    const std::vector<EnvBinding>& bindings);

// POSIX single-quote escaping.
std::string shell_quote(std::string_view value);

}  // namespace forgeci::pipeline

#endif  // FORGECI_PIPELINE_HPP_
