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

#include <gtest/gtest.h>

#include <cstdlib>
#include <sstream>

#include "cluster.hpp"
#include "test_util.hpp"

namespace forgeci::cli {
namespace {

using forgeci::testing::Cluster;
using forgeci::testing::TempDir;
using forgeci::testing::write_file;
using nlohmann::json;

struct Outcome {
  int code;
  std::string out;
  std::string err;
};

Outcome cli(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  const int code = run(args, out, err);
  return {code, out.str(), err.str()};
}

const char* kAddTwo =
    "function out = addTwo(in)\n"
    "% Adds two to its input.\n"
    "%\n"
    "% USAGE:\n"
    "%    out = addTwo(in)\n"
    "out = in + 2;\n";

TEST(Cli, PipelineCheck) {
  TempDir dir;
  write_file(dir / "travis.yml", forgeci::testing::data_file("listing_s1.yml"));
  const auto ok = cli({"pipeline", "check", (dir / "travis.yml").string()});
  EXPECT_EQ(ok.code, 0);
  EXPECT_EQ(ok.out, "valid: 2 phases\n");
  const auto js = cli({"pipeline", "check", (dir / "travis.yml").string(), "--json"});
  EXPECT_EQ(json::parse(js.out)["phases"], 2);

  write_file(dir / "bad.yml", "language: matlab\ndeploy:\n  - x\nscript:\n  - y\n");
  const auto bad = cli({"pipeline", "check", (dir / "bad.yml").string()});
  EXPECT_EQ(bad.code, 1);
  EXPECT_NE(bad.err.find("UnknownKey"), std::string::npos);
  EXPECT_EQ(cli({"pipeline", "check", (dir / "missing.yml").string()}).code, 1);
}

TEST(Cli, GradeAndCoverage) {
  TempDir dir;
  std::filesystem::create_directories(dir / "empty");
  const auto empty = cli({"grade", "--src", (dir / "empty").string()});
  EXPECT_EQ(empty.code, 1);
  EXPECT_NE(empty.err.find("EmptyCodebase"), std::string::npos);

  write_file(dir / "src/addTwo.m", kAddTwo);
  write_file(dir / "src/sub/f.m", "function f\nx = 1;\ny = 2; \nend\n");
  const auto g = cli({"grade", "--src", (dir / "src").string(), "--json"});
  ASSERT_EQ(g.code, 0) << g.err;
  const json gj = json::parse(g.out);
  EXPECT_EQ(gj["executable"], 3);
  EXPECT_EQ(gj["messages"], 1);
  EXPECT_EQ(gj["grade"], "F");
  EXPECT_NE(cli({"grade", "--src", (dir / "src").string()}).out.find("grade F"), std::string::npos);

  write_file(dir / "trace.jsonl", "{\"file\":\"addTwo.m\",\"line\":6}\n{\"file\":\"sub/f.m\",\"line\":2}\n");
  const auto c = cli({"coverage", "--src", (dir / "src").string(), "--trace", (dir / "trace.jsonl").string(), "--json"});
  ASSERT_EQ(c.code, 0) << c.err;
  EXPECT_NEAR(json::parse(c.out)["percent"].get<double>(), 200.0 / 3.0, 1e-9);
  EXPECT_EQ(cli({"coverage", "--src", (dir / "src").string(), "--trace", (dir / "nope").string()}).code, 1);
  EXPECT_EQ(cli({"coverage", "--src", (dir / "nope").string(), "--trace", "x"}).code, 2);
}

TEST(Cli, LintAndFix) {
  TempDir dir;
  write_file(dir / "a.m", "x = f(1,2);   \ny = 3;");
  const auto check = cli({"lint", dir.path().string(), "--json"});
  EXPECT_EQ(check.code, 1);
  EXPECT_EQ(json::parse(check.out)["violations"].size(), 3u);
  const auto fix = cli({"lint", "--fix", dir.path().string()});
  EXPECT_EQ(fix.code, 0) << fix.out;
  EXPECT_EQ(forgeci::testing::slurp(dir / "a.m"), "x = f(1, 2);\ny = 3;\n");
  EXPECT_EQ(cli({"lint", dir.path().string()}).code, 0);
  EXPECT_EQ(cli({"lint", (dir / "nope").string()}).code, 1);
  EXPECT_EQ(cli({"lint", "--rule", "no-such-rule", dir.path().string()}).code, 1);
}

TEST(Cli, DocsAndBadge) {
  TempDir dir;
  write_file(dir / "src/addTwo.m", kAddTwo);
  const auto d = cli({"docs", "--src", (dir / "src").string(), "--out", (dir / "site").string(), "--json"});
  ASSERT_EQ(d.code, 0) << d.err;
  EXPECT_TRUE(std::filesystem::exists(dir / "site/index.md"));
  EXPECT_EQ(json::parse(d.out)["files"].size(), 2u);

  write_file(dir / "bad/f.m", "function f\n% USAGE:\n%\n");
  EXPECT_EQ(cli({"docs", "--src", (dir / "bad").string(), "--out", (dir / "s2").string()}).code, 0);
  EXPECT_EQ(cli({"docs", "--strict", "--src", (dir / "bad").string(), "--out", (dir / "s3").string()}).code, 1);

  const auto b = cli({"badge", "--platform", "linux", "--state", "failure", "--out", (dir / "b.svg").string()});
  EXPECT_EQ(b.code, 0);
  EXPECT_NE(forgeci::testing::slurp(dir / "b.svg").find("<svg"), std::string::npos);
  EXPECT_EQ(cli({"badge", "--platform", "linux", "--state", "mauve", "--out", (dir / "b.svg").string()}).code, 1);
}

TEST(Cli, UsageErrorsExitTwo) {
  EXPECT_EQ(cli({}).code, 2);
  EXPECT_EQ(cli({"teleport"}).code, 2);
  EXPECT_EQ(cli({"trigger", "--job", "x"}).code, 2);
  EXPECT_EQ(cli({"pipeline"}).code, 2);
  const auto bad = cli({"grade"});
  EXPECT_EQ(bad.code, 2);
  EXPECT_NE(bad.err.find("--src"), std::string::npos);
  EXPECT_TRUE(bad.out.empty());
  EXPECT_EQ(cli({"--help"}).code, 0);
  EXPECT_EQ(cli({"lint", "--help"}).code, 0);
}

TEST(Cli, RemoteCommands) {
  Cluster c("language: matlab\nscript:\n  - echo ok\n");
  c.start_master();
  const std::string master = "http://127.0.0.1:" + std::to_string(c.master->http_port());
  const std::string sha(40, 'e');

  const auto nope = cli({"trigger", "--job", "nope", "--sha", sha, "--master", master});
  EXPECT_EQ(nope.code, 1);
  EXPECT_NE(nope.err.find("NoSuchJob"), std::string::npos);

  const auto t = cli({"trigger", "--job", "COBRAToolbox-pr-manual-linux", "--sha", sha, "--master", master, "--json"});
  ASSERT_EQ(t.code, 0) << t.err;
  EXPECT_EQ(json::parse(t.out)["builds"].size(), 4u);

  c.start_agent("linux", "linux");
  ASSERT_TRUE(forgeci::testing::wait_until([&] { return c.all_terminal(sha); }));

  const auto st = cli({"status", "--sha", sha, "--master", master, "--json"});
  ASSERT_EQ(st.code, 0) << st.err;
  EXPECT_EQ(json::parse(st.out)["global"], "success");
  EXPECT_NE(cli({"status", "--sha", sha, "--master", master}).out.find("success"), std::string::npos);

  const auto tr = cli({"trend", "--job", "COBRAToolbox-pr-manual-linux", "--master", master, "--json"});
  ASSERT_EQ(tr.code, 0);
  EXPECT_EQ(json::parse(tr.out)["points"].size(), 4u);
  EXPECT_EQ(cli({"trend", "--job", "nope", "--master", master}).code, 1);
  EXPECT_EQ(cli({"status", "--sha", "abc", "--master", master}).code, 1);

  // FORGECI_CONFIG supplies the master address.
  write_file(c.dir() / "master.yml", "http_port: " + std::to_string(c.master->http_port()) + "\n");
  ::setenv("FORGECI_CONFIG", (c.dir() / "master.yml").c_str(), 1);
  const auto via_env = cli({"trend", "--job", "COBRAToolbox-pr-manual-linux"});
  ::unsetenv("FORGECI_CONFIG");
  EXPECT_EQ(via_env.code, 0) << via_env.err;
}

// Every --json invocation prints one JSON document, whatever goes wrong.
TEST(Cli, JsonOutputParsesUnderFaults) {
  TempDir dir;
  write_file(dir / "src/addTwo.m", kAddTwo);
  write_file(dir / "travis.yml", forgeci::testing::data_file("listing_s1.yml"));
  write_file(dir / "broken.yml", "script:\n\t- x\n");
  write_file(dir / "trace.jsonl", "not json\n");
  const std::string src = (dir / "src").string();
  const std::string dead = "http://127.0.0.1:1";
  const std::vector<std::vector<std::string>> cases = {
      {"pipeline", "check", (dir / "travis.yml").string()},
      {"pipeline", "check", (dir / "broken.yml").string()},
      {"pipeline", "check", (dir / "absent.yml").string()},
      {"grade", "--src", src},
      {"coverage", "--src", src, "--trace", (dir / "trace.jsonl").string()},
      {"coverage", "--src", src, "--trace", (dir / "absent").string()},
      {"lint", src},
      {"docs", "--src", src, "--out", (dir / "site").string()},
      {"badge", "--platform", "linux", "--state", "success", "--out", (dir / "x.svg").string()},
      {"badge", "--platform", "linux", "--state", "success", "--out", (dir / "no/such/dir/x.svg").string()},
      {"trigger", "--job", "j", "--sha", std::string(40, 'a'), "--master", dead},
      {"status", "--sha", std::string(40, 'a'), "--master", dead},
      {"trend", "--job", "j", "--master", dead},
  };
  for (auto args : cases) {
    args.push_back("--json");
    const auto r = cli(args);
    EXPECT_TRUE(r.code == 0 || r.code == 1) << args[0];
    const json j = json::parse(r.out, nullptr, false);
    EXPECT_FALSE(j.is_discarded()) << args[0] << ": " << r.out;
    if (r.code == 1) {
      EXPECT_TRUE(j.contains("error")) << r.out;
      EXPECT_FALSE(r.err.empty());
    }
  }
}

}  // namespace
}  // namespace forgeci::cli
