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

#include "forgeci/pipeline.hpp"

#include <set>

#include "forgeci/crypto.hpp"
#include "forgeci/dialect.hpp"
#include "forgeci/error.hpp"
#include "forgeci/text.hpp"

namespace forgeci::pipeline {
namespace {

std::vector<std::string> commands_of(const dialect::Entry& entry) {
  if (!entry.is_sequence()) {
    throw Error(Errc::IndentationError, "line " + std::to_string(entry.line) +
                                            ": '" + entry.key +
                                            "' expects a sequence of commands");
  }
  std::vector<std::string> out;
  out.reserve(entry.items.size());
  for (const dialect::Item& item : entry.items) {
    if (text::trim(item.text).empty()) {
      throw Error(Errc::EmptyCommand, "line " + std::to_string(item.line));
    }
    out.push_back(item.text);
  }
  return out;
}

}  // namespace

PipelineSpec parse_pipeline(std::string_view text) {
  const dialect::Document doc = dialect::parse(text);
  PipelineSpec spec;
  for (const dialect::Entry& entry : doc.entries) {
    if (entry.key == "language") {
      if (!entry.scalar || text::split_words(*entry.scalar).size() != 1) {
        throw Error(Errc::IndentationError,
                    "line " + std::to_string(entry.line) +
                        ": 'language' expects a single word");
      }
      spec.language = *entry.scalar;
    } else if (entry.key == "before_install") {
      spec.before_install = commands_of(entry);
    } else if (entry.key == "script") {
      spec.script = commands_of(entry);
    } else {
      throw Error(Errc::UnknownKey, entry.key);
    }
  }
  if (spec.script.empty()) throw Error(Errc::MissingScriptPhase, "");
  return spec;
}

std::string render_pipeline(const PipelineSpec& spec) {
  dialect::Document doc;
  if (!spec.language.empty()) {
    doc.entries.push_back(dialect::Entry{"language", 0, spec.language, {}});
  }
  auto add_phase = [&](const char* name, const std::vector<std::string>& cmds) {
    if (cmds.empty()) return;
    dialect::Entry entry{name, 0, std::nullopt, {}};
    for (const auto& c : cmds) entry.items.push_back(dialect::Item{c, 0});
    doc.entries.push_back(std::move(entry));
  };
  add_phase("before_install", spec.before_install);
  add_phase("script", spec.script);
  return dialect::render(doc);
}

std::string spec_hash(const PipelineSpec& spec) {
  return crypto::sha256_hex(render_pipeline(spec)).substr(0, 16);
}

bool is_valid_binding_name(std::string_view name) {
  if (name.empty()) return false;
  for (std::size_t i = 0; i < name.size(); ++i) {
    const char c = name[i];
    const bool ok = (c >= 'A' && c <= 'Z') || c == '_' ||
                    (i > 0 && c >= '0' && c <= '9');
    if (!ok) return false;
  }
  return true;
}

std::string HudsonScript::file_name() const {
  return "hudson-" + spec_hash + ".sh";
}

std::string shell_quote(std::string_view value) {
  std::string out = "'";
  for (char c : value) {
    if (c == '\'') {
      out += "'\\''";
    } else {
      out += c;
    }
  }
  out += '\'';
  return out;
}

HudsonScript generate_hudson_script(const PipelineSpec& spec,
                                    const std::vector<EnvBinding>& bindings) {
  std::set<std::string> seen;
  for (const EnvBinding& b : bindings) {
    if (!is_valid_binding_name(b.name)) throw Error(Errc::InvalidBinding, b.name);
    if (!seen.insert(b.name).second) throw Error(Errc::DuplicateBinding, b.name);
  }

  HudsonScript script;
  script.bindings = bindings;
  script.spec_hash = pipeline::spec_hash(spec);

  std::string& out = script.text;
  out += kInterpreterLine;
  out += '\n';
  out += kFailFastLine;
  out += '\n';
  for (const EnvBinding& b : bindings) {
    out += "export " + b.name + "=" + shell_quote(b.value) + "\n";
  }
  for (const auto* phase : {&spec.before_install, &spec.script}) {
    for (const std::string& cmd : *phase) {
      out += cmd;
      out += '\n';
    }
  }
  return script;
}

}  // namespace forgeci::pipeline
