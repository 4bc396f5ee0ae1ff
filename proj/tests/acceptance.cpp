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


// Acceptance gate. Prints one PASS/FAIL line per criterion and exits
// non-zero when any criterion fails.

#include <chrono>
#include <cmath>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <string>

#include "cluster.hpp"
#include "coverage_oracle.hpp"
#include "forgeci/agent.hpp"
#include "forgeci/docworks.hpp"
#include "forgeci/model.hpp"
#include "forgeci/pipeline.hpp"
#include "forgeci/quality.hpp"
#include "log_writer.hpp"
#include "scheduler_model.hpp"

namespace fs = std::filesystem;
using namespace forgeci;
using testing::TempDir;
using Clock = std::chrono::steady_clock;

namespace {

// Pinned tolerances and budgets.
constexpr auto kMatrixBudget = std::chrono::seconds(1);
constexpr auto kDeskRunBudget = std::chrono::seconds(30);
constexpr int kLogTrials = 1000;
constexpr std::size_t kModelSteps = 10'000;
constexpr int kCoverageSources = 500;
constexpr double kCoverageTolerance = 1e-9;
constexpr int kDocFuzzHeaders = 10'000;
constexpr std::uint64_t kSeed = 20260310;

// Returns "" on success, otherwise the reason.
using Criterion = std::function<std::string()>;

struct Gate {
  int failed = 0;

  void run(const std::string& name, const Criterion& fn) {
    const auto start = Clock::now();
    std::string why;
    try {
      why = fn();
    } catch (const std::exception& e) {
      why = std::string("exception: ") + e.what();
    }
    const auto ms =
        std::chrono::duration_cast<std::chrono::milliseconds>(Clock::now() - start).count();
    if (why.empty()) {
      std::cout << "PASS " << name << " (" << ms << " ms)\n";
    } else {
      ++failed;
      std::cout << "FAIL " << name << ": " << why << "\n";
    }
    std::cout.flush();
  }
};

template <typename A, typename B>
std::string expect_eq(const A& got, const B& want, const std::string& what) {
  if (got == want) return {};
  std::ostringstream s;
  s << what << ": got " << got << ", want " << want;
  return s.str();
}

std::string matrix_expansion() {
  const auto start = Clock::now();
  const auto jobs = model::default_job_table();
  const std::string sha(40, 'a');

  model::TriggerEvent push;
  push.cause = model::TriggerCause::kBranchPush;
  push.commit = {"opencobra/cobratoolbox", sha, "develop", std::nullopt};
  const auto develop = model::expand_matrix(push, jobs);
  if (auto e = expect_eq(develop.size(), 16u, "develop push"); !e.empty()) return e;
  std::map<std::string, int> per_platform;
  for (const auto& b : develop) ++per_platform[b.platform.value];
  for (const auto& p : model::default_platforms()) {
    if (auto e = expect_eq(per_platform[p.value], 4, "develop " + p.value); !e.empty()) return e;
  }

  model::TriggerEvent pr;
  pr.cause = model::TriggerCause::kPrUpdate;
  pr.commit = {"opencobra/cobratoolbox", sha, "feature", 12};
  const auto prs = model::expand_matrix(pr, jobs);
  if (auto e = expect_eq(prs.size(), 7u, "PR event"); !e.empty()) return e;
  per_platform.clear();
  for (const auto& b : prs) ++per_platform[b.platform.value];
  const std::map<std::string, int> want = {{"linux", 4}, {"macOS", 1}, {"windows7", 1}, {"windows10", 1}};
  if (per_platform != want) return "PR event platform split differs";
  for (const auto& b : prs) {
    if (b.platform.value != "linux" && b.version.value != "R2016b") return "PR cell off the stable version";
  }

  for (const char* job : {"COBRAToolbox-branches-manual-linux", "COBRAToolbox-pr-manual-linux"}) {
    model::TriggerEvent manual;
    manual.cause = model::TriggerCause::kManual;
    manual.commit = {"opencobra/cobratoolbox", sha, "develop", std::nullopt};
    manual.target_job = job;
    const auto m = model::expand_matrix(manual, jobs);
    if (auto e = expect_eq(m.size(), 4u, job); !e.empty()) return e;
    for (const auto& b : m) {
      if (b.platform.value != "linux") return std::string(job) + " left linux";
    }
  }
  if (Clock::now() - start >= kMatrixBudget) return "took longer than 1 s";
  return {};
}

std::string desk_run() {
  const auto start = Clock::now();
  const std::string sha = "0123456789abcdef0123456789abcdef01234567";
  testing::Cluster c(
      "language: matlab\n"
      "script:\n"
      "  - sleep 0.1\n"
      "  - if [ \"$ARCH\" = windows7 ] && [ \"$MATLAB_VER\" = R2016b ]; then exit 1; fi\n"
      "  - exit 0\n");
  auto vcs = std::make_shared<status::InMemoryStatusClient>();
  c.start_master(vcs);
  c.start_all_agents();
  if (!c.agents_connected(4)) return "agents did not connect";

  auto r = c.webhook("push", testing::push_body("develop", sha), "acceptance-1");
  if (!r || r->status != 202) return "webhook not accepted";
  if (!testing::wait_until([&] { return c.all_terminal(sha); }, kDeskRunBudget)) {
    return "builds did not finish";
  }

  const auto statuses = vcs->list(sha);
  if (auto e = expect_eq(statuses.size(), 16u, "VCS statuses"); !e.empty()) return e;
  int failures = 0;
  for (const auto& s : statuses) {
    const auto ctx = status::parse_context(s.context);
    const bool failing = ctx.platform.value == "windows7" && ctx.version.value == "R2016b";
    const auto want = failing ? status::StatusState::kFailure : status::StatusState::kSuccess;
    if (s.state != want) return "status " + s.context + " is " + std::string(status::to_string(s.state));
    failures += failing;
  }
  if (failures != 1) return "expected exactly one failing cell";

  const auto st = c.get_json("/api/status/" + sha);
  if (st["global"] != "failure") return "global state is not failure";
  for (const auto& p : model::default_platforms()) {
    const std::string want = p.value == "windows7" ? "failure" : "success";
    if (st["platforms"][p.value] != want) return "platform " + p.value + " aggregates wrongly";
    auto badge = c.http().Get("/badges/" + p.value + ".svg");
    if (!badge || badge->status != 200) return "badge " + p.value + " missing";
    const auto color = status::badge_color(p.value == "windows7" ? status::StatusState::kFailure
                                                                 : status::StatusState::kSuccess);
    if (badge->body.find(color) == std::string::npos) return "badge " + p.value + " has the wrong color";
  }
  if (Clock::now() - start >= kDeskRunBudget) return "took longer than 30 s";
  return {};
}

protocol::Assignment exit_assignment(model::BuildId id, int code) {
  pipeline::PipelineSpec spec;
  spec.script = {"exit " + std::to_string(code)};
  protocol::Assignment a;
  a.build_id = id;
  a.job_name = "solo";
  a.version = {"R2016b"};
  a.platform = {"linux"};
  a.commit = {"repo", std::string(40, 'a'), "develop", std::nullopt};
  a.bindings = {{"ARCH", "linux"}, {"MATLAB_VER", "R2016b"}};
  a.hudson_script = pipeline::generate_hudson_script(spec, a.bindings);
  return a;
}

// A single-version manual job so each trigger is one build.
testing::SchedulerRig& with_solo(testing::SchedulerRig& rig) {
  model::JobDefinition solo;
  solo.name = "solo";
  solo.trigger = model::TriggerKind::kBranchesManual;
  solo.platform = {"linux"};
  solo.versions = {{"R2016b"}};
  rig.config.jobs.push_back(solo);
  return rig;
}

std::string exit_code_fidelity() {
  TempDir dir;
  testing::write_file(dir / "src/README", "x\n");
  agent::LocalDirectoryFetcher fetcher(dir / "src");
  agent::RunOptions options;
  options.workspace_root = dir / "ws";
  options.install_dir = "/opt/matlab";
  options.follow.poll_interval = std::chrono::milliseconds(2);

  testing::SchedulerRig rig;
  rig.config.retention = 1000;
  with_solo(rig).start();
  rig.connect("linux");
  const std::string sha(40, 'b');
  for (int n = 0; n <= 255; ++n) {
    const auto outcome = agent::run_build(exit_assignment(1000 + n, n), fetcher, options);
    if (outcome.exit_code != n) {
      return "exit " + std::to_string(n) + " reported as " + std::to_string(outcome.exit_code);
    }
    const auto group = rig.s->manual_trigger("solo", sha, "a", rig.now);
    rig.s->dispatch(rig.now);
    rig.finish("linux", outcome.exit_code);
    const auto& b = rig.build(group.builds.at(0));
    if ((b.state == model::BuildState::kSuccess) != (n == 0) ||
        (n != 0 && b.state != model::BuildState::kFailure)) {
      return "exit " + std::to_string(n) + " became " + std::string(model::to_string(b.state));
    }
  }
  return {};
}

std::string log_follow_equality() {
  std::mt19937_64 rng(kSeed);
  TempDir dir;
  agent::FollowOptions opt;
  opt.poll_interval = std::chrono::milliseconds(1);
  for (int trial = 0; trial < kLogTrials; ++trial) {
    const fs::path log = dir / ("log" + std::to_string(trial));
    const auto plan = testing::random_plan(rng);
    auto handle = testing::start_writer(log, plan);
    std::string streamed;
    agent::follow_log(log, *handle, [&](std::string_view c) { streamed += c; }, opt);
    if (handle->wait() != 0) return "writer failed in trial " + std::to_string(trial);
    if (streamed != plan.bytes || testing::slurp(log) != streamed) {
      return "stream differs from output.log in trial " + std::to_string(trial);
    }
    fs::remove(log);
  }
  return {};
}

std::string scheduler_model() {
  testing::ModelRunStats stats;
  const std::string divergence = testing::run_scheduler_model(kSeed, kModelSteps, &stats);
  if (!divergence.empty()) return divergence;
  return expect_eq(stats.steps, kModelSteps, "steps");
}

std::string coverage_oracle() {
  std::mt19937_64 rng(kSeed);
  std::vector<quality::LineClassification> cls;
  std::set<quality::ExecutedLine> executed;
  std::size_t denom = 0, numer = 0;
  for (int f = 0; f < kCoverageSources; ++f) {
    const std::string name = "src/f" + std::to_string(f) + ".m";
    const int lines = 1 + static_cast<int>(rng() % 60);
    const std::string src = testing::random_source(rng, lines);
    const auto c = quality::classify_executable(src, name);
    const auto want = testing::oracle_executable(src);
    if (c.executable != want) return "classification differs for source " + std::to_string(f);
    cls.push_back(c);
    denom += want.size();
    for (int l = 1; l <= lines; ++l) {
      if (rng() % 3 == 0) {
        executed.insert({name, l});
        numer += want.contains(l);
      }
    }
  }
  const auto r = quality::compute_coverage(cls, executed);
  const double expect = 100.0 * static_cast<double>(numer) / static_cast<double>(denom);
  if (std::abs(r.percent - expect) > kCoverageTolerance) return "percent off by more than 1e-9";
  return {};
}

std::string grade_chart() {
  const std::vector<std::pair<double, char>> chart = {
      {0, 'A'}, {2.9, 'A'}, {3, 'B'}, {5, 'B'}, {6, 'C'},
      {9, 'D'}, {12, 'E'}, {15, 'E'}, {15.01, 'F'}, {16, 'F'}};
  for (auto [p, l] : chart) {
    if (quality::to_letter(p) != l) return "percent " + std::to_string(p) + " graded wrongly";
  }
  // The published rows: 0-3 A, 3-6 B, above 15 F.
  for (double p = 0; p < 3; p += 0.25) {
    if (quality::to_letter(p) != 'A') return "row A violated";
  }
  for (double p = 3; p < 6; p += 0.25) {
    if (quality::to_letter(p) != 'B') return "row B violated";
  }
  for (double p : {15.001, 20.0, 50.0, 100.0, 1e6}) {
    if (quality::to_letter(p) != 'F') return "row F violated";
  }
  return {};
}

std::string pipeline_golden() {
  const auto spec = pipeline::parse_pipeline(testing::data_file("listing_s1.yml"));
  if (spec.language != "bash") return "language";
  if (spec.before_install !=
      std::vector<std::string>{"if [[ -a .git/shallow ]]; then\n  git fetch --unshallow;\nfi"}) {
    return "before_install";
  }
  if (spec.script != std::vector<std::string>{"bash .ci/runtests.sh"}) return "script";
  if (spec.phase_count() != 2) return "phase count";
  const auto script =
      pipeline::generate_hudson_script(spec, {{"ARCH", "Linux"}, {"MATLAB_VER", "R2016b"}});
  if (script.text != testing::data_file("listing_s1_hudson.golden.sh")) return "script differs from golden file";
  return {};
}

std::string docstring_rules() {
  const auto records = docworks::extract_docstrings(
      "function out = addTwo(in)\n% Adds two to its input.\n%\n% USAGE:\n%    out = addTwo(in)\n"
      "%\n% INPUT:\n%    in: a number\nout = in + 2;\n",
      "src/addTwo.m");
  if (records.size() != 1 || records[0].function_name != "addTwo" || records[0].blocks.size() != 2 ||
      !(records[0].blocks[0] == docworks::DocBlock{"USAGE", {"out = addTwo(in)"}}) ||
      !(records[0].blocks[1] == docworks::DocBlock{"INPUT", {"in: a number"}})) {
    return "USAGE/INPUT example";
  }
  const auto plain = docworks::extract_docstrings("function f\n% Just text.\n% More text.\n");
  if (plain.size() != 1 || !plain[0].blocks.empty() || plain[0].preamble.size() != 2) {
    return "preamble-only example";
  }
  try {
    docworks::extract_docstrings("function f\n% USAGE:\n%\n% INPUT:\n%    x\n");
    return "empty block accepted";
  } catch (const Error& e) {
    if (e.code() != Errc::EmptyBlock) return "empty block raised " + std::string(e.name());
  }

  std::mt19937_64 rng(kSeed);
  const std::string alphabet = "%: \nfunctionUSAGEINPUTNOTE=()[],xy\t\r";
  for (int i = 0; i < kDocFuzzHeaders; ++i) {
    std::string src = rng() % 2 ? "function f\n" : "";
    const std::size_t n = rng() % 160;
    for (std::size_t k = 0; k < n; ++k) src += alphabet[rng() % alphabet.size()];
    docworks::extract_docstrings_lenient(src);
    try {
      docworks::extract_docstrings(src);
    } catch (const Error& e) {
      if (e.code() != Errc::EmptyBlock) return "fuzz header raised " + std::string(e.name());
    }
  }
  return {};
}

std::string retention_and_maintenance() {
  {
    testing::SchedulerRig rig;
    rig.config.retention = 30;
    with_solo(rig).start();
    rig.connect("linux");
    for (int i = 0; i < 35; ++i) {
      rig.s->manual_trigger("solo", std::string(40, 'c'), "a", rig.now);
      rig.s->dispatch(rig.now);
      rig.finish("linux", 0, {"log line\n"});
    }
    int kept = 0;
    for (std::uint64_t n = 1; n <= 35; ++n) {
      const bool has_log = rig.store->log_size("solo", n) > 0;
      if (has_log != (n > 5)) return "build " + std::to_string(n) + " log kept wrongly";
      kept += has_log;
      if (rig.s->find("solo", n) == nullptr) return "metadata of build " + std::to_string(n) + " lost";
    }
    if (kept != 30) return "kept " + std::to_string(kept) + " logs";
  }

  testing::SchedulerRig rig;
  rig.start();
  int loads = 0;
  auto loader = [&] {
    ++loads;
    return rig.config;
  };
  rig.s->manual_trigger("COBRAToolbox-branches-manual-linux", std::string(40, 'd'), "a", rig.now);
  rig.connect("linux");
  rig.s->dispatch(rig.now);
  const auto due = testing::local_time(2026, 3, 11, 3, 5);
  if (rig.s->maintenance_reload(due, loader).reason != "busy" || loads != 0) {
    return "reload ran while a build was running";
  }
  while (rig.running_on("linux").value_or(0) != 0) {
    rig.finish("linux", 0);
    rig.s->dispatch(rig.now);
  }
  if (!rig.s->maintenance_reload(due, loader).reloaded || loads != 1) return "idle reload did not run";
  return {};
}

}  // namespace

int main() {
  Gate gate;
  gate.run("matrix expansion 16/7/4", matrix_expansion);
  gate.run("end-to-end desk run", desk_run);
  gate.run("exit-code fidelity 0..255", exit_code_fidelity);
  gate.run("log-follow equality x1000", log_follow_equality);
  gate.run("scheduler model 10000 steps", scheduler_model);
  gate.run("coverage oracle x500", coverage_oracle);
  gate.run("grade chart", grade_chart);
  gate.run("pipeline golden", pipeline_golden);
  gate.run("docstring rules", docstring_rules);
  gate.run("retention and maintenance", retention_and_maintenance);
  std::cout << (gate.failed == 0 ? "ACCEPTANCE PASS" : "ACCEPTANCE FAIL") << "\n";
  return gate.failed == 0 ? 0 : 1;
}
