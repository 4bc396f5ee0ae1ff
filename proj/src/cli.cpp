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


#include "forgeci/cli.hpp"

#include <signal.h>
#include <unistd.h>

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <thread>

#include "CLI11.hpp"
#include "forgeci/agent_client.hpp"
#include "forgeci/config.hpp"
#include "forgeci/docworks.hpp"
#include "forgeci/error.hpp"
#include "forgeci/master_service.hpp"
#include "forgeci/pipeline.hpp"
#include "forgeci/quality.hpp"
#include "forgeci/status.hpp"
#include "httplib.h"
#include "json.hpp"

namespace forgeci::cli {
namespace {

namespace fs = std::filesystem;
using json = nlohmann::json;

struct Options {
  bool as_json = false;
  std::string master_url;
  std::string config;
  std::string job;
  std::string sha;
  std::string actor;
  std::string platform;
  std::string state;
  std::string out_path;
  std::string src;
  std::string trace;
  std::string dir;
  std::string file;
  bool fix = false;
  bool strict = false;
  std::vector<std::string> rules;
};

std::string config_path(const Options& o) {
  if (!o.config.empty()) return o.config;
  if (const char* env = std::getenv("FORGECI_CONFIG")) return env;
  return {};
}

std::string master_url(const Options& o) {
  if (!o.master_url.empty()) return o.master_url;
  const std::string path = config_path(o);
  if (path.empty()) return "http://127.0.0.1:8080";
  const config::MasterConfig c = config::load_master_config(path);
  return "http://127.0.0.1:" + std::to_string(c.http_port);
}

// Performs one request against the master and returns the decoded body.
// HTTP errors carrying an error name come back as that Error.
json remote(const Options& o, const std::string& method, const std::string& path,
            const json& body = nullptr) {
  const std::string url = master_url(o);
  httplib::Client client(url);
  client.set_connection_timeout(5);
  client.set_read_timeout(30);
  httplib::Headers headers;
  if (!o.actor.empty()) headers.emplace("X-Actor", o.actor);
  const httplib::Result r =
      method == "POST" ? client.Post(path, headers, body.dump(), "application/json")
                       : client.Get(path, headers);
  if (!r) {
    throw Error(Errc::ConnectionFailed, url + ": " + httplib::to_string(r.error()));
  }
  json j = json::parse(r->body, nullptr, false);
  if (r->status >= 400) {
    if (j.is_object() && j.contains("error")) {
      const std::string name = j["error"].get<std::string>();
      const std::string detail = j.value("detail", "");
      if (auto code = parse_errc(name)) throw Error(*code, detail);
      throw Error(Errc::IoError, name + ": " + detail);
    }
    throw Error(Errc::IoError, "HTTP " + std::to_string(r->status));
  }
  if (j.is_discarded()) throw Error(Errc::MalformedPayload, "master sent non-JSON");
  return j;
}

std::string percent(double v) {
  std::ostringstream s;
  s << std::fixed << std::setprecision(2) << v << '%';
  return s.str();
}

// Blocks SIGINT/SIGTERM in every thread created after this call and waits
// for one of them, or for `until` to be raised by the worker.
class SignalWaiter {
 public:
  SignalWaiter() {
    sigemptyset(&set_);
    sigaddset(&set_, SIGINT);
    sigaddset(&set_, SIGTERM);
    pthread_sigmask(SIG_BLOCK, &set_, &old_);
  }
  ~SignalWaiter() { pthread_sigmask(SIG_SETMASK, &old_, nullptr); }
  int wait() {
    int sig = 0;
    sigwait(&set_, &sig);
    return sig;
  }

 private:
  sigset_t set_{};
  sigset_t old_{};
};

int cmd_master_serve(const Options& o, std::ostream& out) {
  const std::string path = config_path(o);
  if (path.empty()) throw Error(Errc::ConfigInvalid, "no --config and FORGECI_CONFIG is unset");
  master::MasterOptions options;
  options.config = config::load_master_config(path);
  options.config_path = path;
  SignalWaiter signals;
  master::MasterService service(std::move(options));
  service.start();
  out << "forgeci master: agents on port " << service.agent_port() << ", HTTP on port "
      << service.http_port() << std::endl;
  signals.wait();
  service.stop();
  return kExitOk;
}

int cmd_agent_run(const Options& o, std::ostream& out) {
  const std::string path = config_path(o);
  if (path.empty()) throw Error(Errc::ConfigInvalid, "no --config and FORGECI_CONFIG is unset");
  const config::AgentConfig c = config::load_agent_config(path);
  SignalWaiter signals;
  agent::AgentClient client(c, agent::make_fetcher(c));
  std::atomic<bool> interrupted{false};
  std::exception_ptr failure;
  std::thread worker([&] {
    try {
      client.run();
    } catch (...) {
      failure = std::current_exception();
    }
    if (!interrupted) kill(getpid(), SIGTERM);
  });
  out << "forgeci agent " << c.agent_name << ": connecting to " << c.master_host << ':'
      << c.master_port << std::endl;
  signals.wait();
  interrupted = true;
  client.stop();
  worker.join();
  if (failure) std::rethrow_exception(failure);
  return kExitOk;
}

int cmd_trigger(const Options& o, std::ostream& out) {
  const json g = remote(o, "POST", "/api/jobs/" + o.job + "/trigger", json{{"sha", o.sha}});
  if (o.as_json) {
    out << g.dump() << '\n';
    return kExitOk;
  }
  out << "queued " << g["builds"].size() << " build(s) for " << g["commit"]["sha"].get<std::string>()
      << '\n';
  for (const auto& b : g["builds"]) {
    out << "  #" << b["id"] << ' ' << b["job"].get<std::string>() << ' '
        << b["version"].get<std::string>() << ' ' << b["console_url"].get<std::string>()
        << '\n';
  }
  return kExitOk;
}

int cmd_status(const Options& o, std::ostream& out) {
  if (!model::is_full_sha(o.sha)) throw Error(Errc::BadSha, o.sha);
  const json s = remote(o, "GET", "/api/status/" + o.sha);
  if (o.as_json) {
    out << s.dump() << '\n';
    return kExitOk;
  }
  out << "commit " << o.sha << ": " << s["global"].get<std::string>() << '\n';
  for (const auto& [platform, state] : s["platforms"].items()) {
    out << "  " << std::left << std::setw(12) << platform << state.get<std::string>() << '\n';
  }
  for (const auto& st : s["statuses"]) {
    out << "    " << st["context"].get<std::string>() << ": " << st["state"].get<std::string>()
        << '\n';
  }
  return kExitOk;
}

int cmd_trend(const Options& o, std::ostream& out) {
  const json t = remote(o, "GET", "/api/jobs/" + o.job + "/trend");
  if (o.as_json) {
    out << t.dump() << '\n';
    return kExitOk;
  }
  out << "job " << o.job << ": " << t["points"].size() << " finished build(s)\n";
  for (const auto& p : t["points"]) {
    out << "  #" << p["number"] << ' ' << p["duration_ms"] << " ms " << p["state"].get<std::string>()
        << '\n';
  }
  return kExitOk;
}

int cmd_badge(const Options& o, std::ostream& out) {
  const auto state = status::parse_status_state(o.state);
  if (!state) throw Error(Errc::InvalidArgument, "state must be pending, success or failure");
  const status::Badge badge = status::render_badge(model::PlatformLabel{o.platform}, *state);
  std::ofstream f(o.out_path, std::ios::binary | std::ios::trunc);
  if (!(f << badge.svg)) throw Error(Errc::IoError, "cannot write " + o.out_path);
  if (o.as_json) {
    out << json{{"platform", o.platform}, {"state", o.state}, {"color", status::badge_color(*state)},
                {"out", o.out_path}}.dump()
        << '\n';
  } else {
    out << "wrote " << o.out_path << '\n';
  }
  return kExitOk;
}

int cmd_coverage(const Options& o, std::ostream& out) {
  const auto classes = quality::classify_tree(o.src);
  const auto executed = quality::read_trace(o.trace, o.src);
  const quality::CoverageReport report = quality::compute_coverage(classes, executed);
  if (o.as_json) {
    out << quality::coverage_json(report) << '\n';
  } else {
    out << quality::coverage_table(report);
  }
  return kExitOk;
}

int cmd_grade(const Options& o, std::ostream& out) {
  const auto classes = quality::classify_tree(o.src);
  quality::LintAnalyzer analyzer;
  std::map<std::string, std::size_t> counts;
  for (const auto& c : classes) {
    counts[c.file] = analyzer.count_messages(c.file, quality::read_file(fs::path(o.src) / c.file));
  }
  const quality::GradeReport g = quality::grade(counts, classes);
  if (o.as_json) {
    out << json{{"messages", g.total_messages},
                {"executable", g.total_executable},
                {"percent", g.percent},
                {"grade", std::string(1, g.letter)}}
               .dump()
        << '\n';
  } else {
    out << "grade " << g.letter << " (" << g.total_messages << " messages / "
        << g.total_executable << " executable lines = " << percent(g.percent) << ")\n";
  }
  return kExitOk;
}

int cmd_lint(const Options& o, std::ostream& out, std::ostream& err) {
  const quality::RuleSet rules =
      o.rules.empty() ? quality::RuleSet::all() : quality::RuleSet::from_ids(o.rules);
  if (!fs::is_directory(o.dir)) throw Error(Errc::IoError, o.dir + " is not a directory");
  const auto files = quality::find_sources(o.dir);
  const quality::LintReport r = o.fix ? quality::lint_fix(files, rules)
                                      : quality::lint_check(files, rules);
  for (const auto& e : r.errors) err << e.file << ": " << e.message << '\n';
  if (o.as_json) {
    json v = json::array();
    for (const auto& x : r.violations) {
      v.push_back({{"file", x.file}, {"line", x.line}, {"rule", x.rule},
                   {"message", x.message}, {"fixable", x.fixable}});
    }
    out << json{{"violations", v}, {"rewritten", r.rewritten}, {"errors", r.errors.size()}}.dump()
        << '\n';
  } else {
    for (const auto& x : r.violations) {
      out << x.file << ':' << x.line << ": [" << x.rule << "] " << x.message << '\n';
    }
    if (o.fix) out << "rewrote " << r.rewritten.size() << " file(s)\n";
    out << r.violations.size() << " violation(s)\n";
  }
  return (r.violations.empty() && r.errors.empty()) ? kExitOk : kExitFailure;
}

int cmd_docs(const Options& o, std::ostream& out, std::ostream& err) {
  std::vector<docworks::DocRecord> records;
  for (const fs::path& p : quality::find_sources(o.src)) {
    const std::string rel = p.lexically_relative(o.src).generic_string();
    const std::string text = quality::read_file(p);
    if (o.strict) {
      auto r = docworks::extract_docstrings(text, rel);
      records.insert(records.end(), r.begin(), r.end());
    } else {
      auto x = docworks::extract_docstrings_lenient(text, rel);
      for (const auto& w : x.warnings) err << rel << ':' << w.line << ": " << w.message << '\n';
      records.insert(records.end(), x.records.begin(), x.records.end());
    }
  }
  const docworks::Site site = docworks::build_site(std::move(records), o.out_path);
  for (const auto& w : site.warnings) err << "warning: " << w << '\n';
  if (o.as_json) {
    json files = json::array();
    for (const auto& f : site.files) files.push_back(f.name);
    out << json{{"files", files}, {"warnings", site.warnings}}.dump() << '\n';
  } else {
    out << "wrote " << site.files.size() << " page(s) to " << o.out_path << '\n';
  }
  return kExitOk;
}

int cmd_pipeline_check(const Options& o, std::ostream& out) {
  const pipeline::PipelineSpec spec = pipeline::parse_pipeline(quality::read_file(o.file));
  if (o.as_json) {
    out << json{{"valid", true},
                {"phases", spec.phase_count()},
                {"language", spec.language},
                {"before_install", spec.before_install},
                {"script", spec.script},
                {"spec_hash", pipeline::spec_hash(spec)}}
               .dump()
        << '\n';
  } else {
    out << "valid: " << spec.phase_count() << " phases\n";
  }
  return kExitOk;
}


}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  Options o;
  CLI::App app{"forgeci: continuous integration for MATLAB toolboxes", "forgeci"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "forgeci 1.0.0");

  auto add_json = [&](CLI::App* c) { c->add_flag("--json", o.as_json, "Print machine-readable JSON"); };
  auto add_remote = [&](CLI::App* c) {
    c->add_option("--master", o.master_url, "Master HTTP base URL");
    c->add_option("--config", o.config, "Master config used to locate the HTTP port");
  };

  auto* master = app.add_subcommand("master", "Master service");
  master->require_subcommand(1);
  auto* serve = master->add_subcommand("serve", "Run the master");
  serve->add_option("--config", o.config, "Master config file (default: $FORGECI_CONFIG)");

  auto* agent = app.add_subcommand("agent", "Build agent");
  agent->require_subcommand(1);
  auto* agent_run = agent->add_subcommand("run", "Run an agent");
  agent_run->add_option("--config", o.config, "Agent config file (default: $FORGECI_CONFIG)");

  auto* trigger = app.add_subcommand("trigger", "Manually trigger a job at a commit");
  trigger->add_option("--job", o.job, "Job name")->required();
  trigger->add_option("--sha", o.sha, "Full or abbreviated commit sha")->required();
  trigger->add_option("--actor", o.actor, "Name recorded in the audit log");
  add_remote(trigger);
  add_json(trigger);

  auto* stat = app.add_subcommand("status", "Show the status matrix of a commit");
  stat->add_option("--sha", o.sha, "Full commit sha")->required();
  add_remote(stat);
  add_json(stat);

  auto* trend = app.add_subcommand("trend", "Show the build-time trend of a job");
  trend->add_option("--job", o.job, "Job name")->required();
  add_remote(trend);
  add_json(trend);

  auto* badge = app.add_subcommand("badge", "Render a platform badge");
  badge->add_option("--platform", o.platform, "Platform label")->required();
  badge->add_option("--state", o.state, "pending, success or failure")->required();
  badge->add_option("--out", o.out_path, "Output SVG file")->required();
  add_json(badge);

  auto* coverage = app.add_subcommand("coverage", "Line coverage of a source tree");
  coverage->add_option("--src", o.src, "Source root")->required()->check(CLI::ExistingDirectory);
  coverage->add_option("--trace", o.trace, "Executed-line trace")->required();
  add_json(coverage);

  auto* grade = app.add_subcommand("grade", "Code grade of a source tree");
  grade->add_option("--src", o.src, "Source root")->required()->check(CLI::ExistingDirectory);
  add_json(grade);

  auto* lint = app.add_subcommand("lint", "Check or fix style");
  lint->add_flag("--fix", o.fix, "Rewrite fixable violations in place");
  lint->add_option("--rule", o.rules, "Restrict to these rule ids");
  lint->add_option("dir", o.dir, "Source root")->required();
  add_json(lint);

  auto* docs = app.add_subcommand("docs", "Build the documentation site");
  docs->add_option("--src", o.src, "Source root")->required()->check(CLI::ExistingDirectory);
  docs->add_option("--out", o.out_path, "Output directory")->required();
  docs->add_flag("--strict", o.strict, "Fail on an empty docstring block");
  add_json(docs);

  auto* pipe = app.add_subcommand("pipeline", "Pipeline files");
  pipe->require_subcommand(1);
  auto* check = pipe->add_subcommand("check", "Validate a pipeline file");
  check->add_option("file", o.file, "Pipeline file")->required();
  add_json(check);

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::CallForVersion&) {
    out << "forgeci 1.0.0\n";
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n";
    const CLI::App* failing = &app;
    for (CLI::App* sub = app.get_subcommands().empty() ? nullptr : app.get_subcommands().front();
         sub != nullptr;
         sub = sub->get_subcommands().empty() ? nullptr : sub->get_subcommands().front()) {
      failing = sub;
    }
    err << failing->help();
    return kExitUsage;
  }

  try {
    if (serve->parsed()) return cmd_master_serve(o, out);
    if (agent_run->parsed()) return cmd_agent_run(o, out);
    if (trigger->parsed()) return cmd_trigger(o, out);
    if (stat->parsed()) return cmd_status(o, out);
    if (trend->parsed()) return cmd_trend(o, out);
    if (badge->parsed()) return cmd_badge(o, out);
    if (coverage->parsed()) return cmd_coverage(o, out);
    if (grade->parsed()) return cmd_grade(o, out);
    if (lint->parsed()) return cmd_lint(o, out, err);
    if (docs->parsed()) return cmd_docs(o, out, err);
    if (check->parsed()) return cmd_pipeline_check(o, out);
  } catch (const Error& e) {
    if (o.as_json) out << json{{"error", std::string(e.name())}, {"detail", e.detail()}}.dump() << '\n';
    err << "error: " << e.what() << '\n';
    return kExitFailure;
  } catch (const std::exception& e) {
    if (o.as_json) out << json{{"error", "InternalError"}, {"detail", e.what()}}.dump() << '\n';
    err << "error: " << e.what() << '\n';
    return kExitFailure;
  }
  err << app.help();
  return kExitUsage;
}

}  // namespace forgeci::cli
