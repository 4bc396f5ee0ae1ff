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

#include <gtest/gtest.h>

#include <random>
#include <sstream>

#include "test_util.hpp"

namespace forgeci::status {
namespace {

using model::BuildState;
using model::PlatformLabel;
using model::RuntimeVersion;
using testing::error_of;

TEST(Status, BuildStateMapping) {
  EXPECT_EQ(status_of(BuildState::kPending), StatusState::kPending);
  EXPECT_EQ(status_of(BuildState::kRunning), StatusState::kPending);
  EXPECT_EQ(status_of(BuildState::kSuccess), StatusState::kSuccess);
  EXPECT_EQ(status_of(BuildState::kFailure), StatusState::kFailure);
  EXPECT_EQ(status_of(BuildState::kAborted), StatusState::kFailure);
}

TEST(Status, ContextRoundTrip) {
  const auto ctx = make_context("COBRAToolbox-pr-auto-linux", {"R2016b"}, {"linux"});
  EXPECT_EQ(ctx, "ci/COBRAToolbox-pr-auto-linux/R2016b/linux");
  const ParsedContext p = parse_context(ctx);
  EXPECT_EQ(p.job_name, "COBRAToolbox-pr-auto-linux");
  EXPECT_EQ(p.version.value, "R2016b");
  EXPECT_EQ(p.platform.value, "linux");
  for (const char* bad : {"", "ci/a/b", "cd/a/b/c", "ci/a/b/c/d", "ci//b/c"}) {
    EXPECT_EQ(error_of([&] { parse_context(bad); }), Errc::MalformedContext) << bad;
  }
}

// Independent restatement of the combination rule.
StatusState oracle_combine(const std::vector<StatusState>& v) {
  int failures = 0, successes = 0;
  for (auto s : v) {
    failures += s == StatusState::kFailure;
    successes += s == StatusState::kSuccess;
  }
  if (failures > 0) return StatusState::kFailure;
  if (!v.empty() && successes == static_cast<int>(v.size())) return StatusState::kSuccess;
  return StatusState::kPending;
}

TEST(Aggregate, CombineMatchesOracle) {
  std::mt19937_64 rng(8);
  EXPECT_EQ(combine({}), StatusState::kPending);
  for (int i = 0; i < 5000; ++i) {
    std::vector<StatusState> v(rng() % 6);
    for (auto& s : v) s = static_cast<StatusState>(rng() % 3);
    ASSERT_EQ(combine(v), oracle_combine(v));
  }
}

TEST(Aggregate, RandomMatrices) {
  const auto platforms = model::default_platforms();
  const auto versions = model::default_versions();
  std::mt19937_64 rng(13);
  const std::string sha(40, 'c');
  for (int trial = 0; trial < 1000; ++trial) {
    std::vector<Cell> expected;
    for (const auto& p : platforms) {
      for (const auto& v : versions) {
        if (rng() % 3) expected.push_back({p, v});
      }
    }
    std::vector<CommitStatus> statuses;
    std::map<Cell, std::vector<StatusState>> by_cell;
    for (const auto& cell : expected) {
      const int n = static_cast<int>(rng() % 3);
      for (int k = 0; k < n; ++k) {
        const auto st = static_cast<StatusState>(rng() % 3);
        statuses.push_back({sha, make_context("job" + std::to_string(k), cell.second, cell.first),
                            st, "", ""});
        by_cell[cell].push_back(st);
      }
    }
    const auto m = aggregate(sha, statuses, expected);
    std::map<PlatformLabel, std::vector<StatusState>> per_platform;
    std::vector<StatusState> all;
    for (const auto& cell : expected) {
      auto it = by_cell.find(cell);
      const StatusState s =
          it == by_cell.end() ? StatusState::kPending : oracle_combine(it->second);
      ASSERT_EQ(m.cells.at(cell), s);
      per_platform[cell.first].push_back(s);
      all.push_back(s);
    }
    for (const auto& [p, v] : per_platform) ASSERT_EQ(m.per_platform.at(p), oracle_combine(v));
    ASSERT_EQ(m.global, oracle_combine(all));
  }
}

TEST(Badge, ColorsAndEscaping) {
  EXPECT_EQ(badge_text(StatusState::kSuccess), "passing");
  EXPECT_EQ(badge_text(StatusState::kFailure), "failing");
  EXPECT_EQ(badge_text(StatusState::kPending), "pending");
  const Badge b = render_badge({"win<7>"}, StatusState::kFailure);
  EXPECT_NE(b.svg.find("#e05d44"), std::string::npos);
  EXPECT_NE(b.svg.find("win&lt;7&gt;"), std::string::npos);
  EXPECT_EQ(b.svg.find("win<7>"), std::string::npos);
  EXPECT_NE(render_badge({"linux"}, StatusState::kSuccess).svg.find("#4c1"), std::string::npos);
  EXPECT_TRUE(b.svg.starts_with("<svg"));
}

TEST(Clients, InMemoryLatestWins) {
  InMemoryStatusClient c;
  const std::string sha(40, 'a');
  c.set({sha, "ci/b/R1/linux", StatusState::kPending, "", ""});
  c.set({sha, "ci/a/R1/linux", StatusState::kPending, "", ""});
  c.set({sha, "ci/b/R1/linux", StatusState::kSuccess, "", ""});
  const auto l = c.list(sha);
  ASSERT_EQ(l.size(), 2u);
  EXPECT_EQ(l[0].context, "ci/a/R1/linux");
  EXPECT_EQ(l[1].state, StatusState::kSuccess);
  EXPECT_EQ(c.write_count(), 3u);
  EXPECT_TRUE(c.list(std::string(40, 'b')).empty());
}

TEST(Clients, FileClientReplays) {
  testing::TempDir dir;
  const std::string sha(40, 'a');
  {
    FileStatusClient c(dir / "statuses.jsonl");
    c.set({sha, "ci/j/R1/linux", StatusState::kPending, "u", "d"});
    c.set({sha, "ci/j/R1/linux", StatusState::kFailure, "u", "d"});
  }
  FileStatusClient again(dir / "statuses.jsonl");
  const auto l = again.list(sha);
  ASSERT_EQ(l.size(), 1u);
  EXPECT_EQ(l[0].state, StatusState::kFailure);
  EXPECT_EQ(l[0].target_url, "u");
}

TEST(Clients, ResolveSha) {
  const std::string a = "abcdef1" + std::string(33, '0');
  const std::string b = "abcdef2" + std::string(33, '0');
  const std::set<std::string> known = {a, b};
  EXPECT_EQ(resolve_against("abcdef1", known), a);
  EXPECT_EQ(resolve_against(a, known), a);
  EXPECT_EQ(error_of([&] { resolve_against("abcdef", known); }), Errc::BadSha);
  EXPECT_EQ(error_of([&] { resolve_against("abcdef", {a}); }), Errc::BadSha);
  EXPECT_EQ(error_of([&] { resolve_against("ABCDEF1", known); }), Errc::BadSha);
  EXPECT_EQ(error_of([&] { resolve_against("1234567", known); }), Errc::BadSha);
  // Ambiguous prefix.
  EXPECT_EQ(error_of([&] { resolve_against("abcdef0", {"abcdef0" + std::string(33, '1'),
                                                       "abcdef0" + std::string(33, '2')}); }),
            Errc::BadSha);
}

class FlakyClient : public InMemoryStatusClient {
 public:
  FlakyClient(int transient_failures, Errc other = Errc::TransientClientError)
      : remaining_(transient_failures), kind_(other) {}
  void set(const CommitStatus& s) override {
    ++calls;
    if (remaining_-- > 0) throw Error(kind_, "flaky");
    InMemoryStatusClient::set(s);
  }
  int calls = 0;

 private:
  int remaining_;
  Errc kind_;
};

TEST(Retry, BacksOffExponentially) {
  std::vector<std::chrono::milliseconds> sleeps;
  RetryPolicy p;
  p.sleep = [&](std::chrono::milliseconds d) { sleeps.push_back(d); };
  FlakyClient c(2);
  const auto ack = set_status(c, {std::string(40, 'a'), "ci/j/v/p", StatusState::kSuccess, "", ""}, p);
  EXPECT_EQ(ack.attempts, 3);
  ASSERT_EQ(sleeps.size(), 2u);
  EXPECT_EQ(sleeps[0].count(), 100);
  EXPECT_EQ(sleeps[1].count(), 200);
}

TEST(Retry, GivesUpAfterMaxRetries) {
  RetryPolicy p;
  p.sleep = [](std::chrono::milliseconds) {};
  FlakyClient c(10);
  EXPECT_EQ(error_of([&] { set_status(c, {"s", "c", StatusState::kPending, "", ""}, p); }),
            Errc::PermanentClientError);
  EXPECT_EQ(c.calls, 4);
}

TEST(Retry, NonTransientFailsImmediately) {
  RetryPolicy p;
  p.sleep = [](std::chrono::milliseconds) {};
  FlakyClient c(1, Errc::IoError);
  EXPECT_EQ(error_of([&] { set_status(c, {"s", "c", StatusState::kPending, "", ""}, p); }),
            Errc::PermanentClientError);
  EXPECT_EQ(c.calls, 1);
}

TEST(Override, RequiresAdminAndKnownContext) {
  InMemoryStatusClient c;
  const std::string sha(40, 'd');
  const std::string ctx = "ci/j/R2016b/linux";
  c.set({sha, ctx, StatusState::kFailure, "u", "d"});
  std::vector<AuditEntry> audit;
  const std::set<std::string> admins = {"root"};
  const auto now = model::Clock::now();
  EXPECT_EQ(error_of([&] {
              override_status(c, sha, ctx, StatusState::kSuccess, "eve", admins, audit, now);
            }),
            Errc::Unauthorized);
  EXPECT_EQ(error_of([&] {
              override_status(c, sha, "ci/x/R2016b/linux", StatusState::kSuccess, "root",
                              admins, audit, now);
            }),
            Errc::UnknownContext);
  EXPECT_TRUE(audit.empty());
  const auto s = override_status(c, sha, ctx, StatusState::kSuccess, "root", admins, audit, now);
  EXPECT_EQ(s.state, StatusState::kSuccess);
  ASSERT_EQ(audit.size(), 1u);
  EXPECT_EQ(audit[0].old_state, StatusState::kFailure);
  EXPECT_EQ(audit[0].actor, "root");
  EXPECT_EQ(c.list(sha)[0].state, StatusState::kSuccess);
}

TEST(Notify, SinksRecord) {
  RecordingSink r;
  r.notify({1, "job", "linux", "R2016b", "sha", 1, "", "url"});
  ASSERT_EQ(r.notifications().size(), 1u);
  std::ostringstream out;
  StreamSink s(out);
  s.notify({1, "job", "linux", "R2016b", "sha", 1, "", "url"});
  EXPECT_NE(out.str().find("job"), std::string::npos);
}

}  // namespace
}  // namespace forgeci::status
