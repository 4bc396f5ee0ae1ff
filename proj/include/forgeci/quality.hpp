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

// Line coverage, code-efficiency grading and a small style linter for
// MATLAB-style source trees.

#ifndef FORGECI_QUALITY_HPP_
#define FORGECI_QUALITY_HPP_

#include <array>
#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace forgeci::quality {

// A line whose first whole token is one of these is not executable.
inline constexpr std::array<std::string_view, 6> kNonExecutableKeywords = {
    "end", "otherwise", "switch", "else", "case", "function"};

struct LineClassification {
  std::string file;
  std::set<int> executable;  // 1-based
  int total_lines = 0;
};

// A line is executable iff, after leading whitespace, it is non-empty, does
// not start with '%', and its first whole token is not a block keyword.
LineClassification classify_executable(std::string_view text, std::string file = {});

using ExecutedLine = std::pair<std::string, int>;

struct FileCoverage {
  std::string file;
  std::size_t executable = 0;
  std::size_t executed = 0;  // executed ∩ executable
};

struct CoverageReport {
  std::vector<FileCoverage> files;  // sorted by path
  std::size_t total_executable = 0;
  std::size_t total_executed = 0;
  std::size_t ignored_hits = 0;  // executed lines outside the executable set
  double percent = 100.0;
  bool empty_denominator = false;
};

// Throws Error{UnknownFile} for executed lines in unclassified files.
CoverageReport compute_coverage(const std::vector<LineClassification>& classifications,
                                const std::set<ExecutedLine>& executed);

struct GradeReport {
  std::size_t total_messages = 0;
  std::size_t total_executable = 0;
  double percent = 0.0;
  char letter = 'A';
};

// A [0,3) B [3,6) C [6,9) D [9,12) E [12,15] F (15,inf).
// Throws Error{NegativePercent}.
char to_letter(double percent);

// percent = 100 * total messages / total executable lines.
// Throws Error{EmptyCodebase, UnknownFile}.
GradeReport grade(const std::map<std::string, std::size_t>& message_counts,
                  const std::vector<LineClassification>& classifications);

// ---------------------------------------------------------------------------
// Lint

enum class Rule {
  kTrailingWhitespace,
  kTabs,
  kLineLength,
  kMissingFinalNewline,
  kSpaceAfterComma,
};

std::string_view rule_id(Rule rule);
bool rule_fixable(Rule rule);

struct RuleSet {
  std::set<Rule> rules;
  std::size_t max_line_length = 120;

  static RuleSet all();
  // Throws Error{InvalidArgument} for an unknown rule id.
  static RuleSet from_ids(const std::vector<std::string>& ids);
  bool has(Rule r) const { return rules.contains(r); }
};

struct LintViolation {
  std::string file;
  int line = 0;
  std::string rule;
  std::string message;
  bool fixable = false;

  bool operator==(const LintViolation&) const = default;
};

std::vector<LintViolation> check_text(const std::string& file, std::string_view text,
                                      const RuleSet& rules);
// Applies every fixable rule; fix_text(fix_text(x)) == fix_text(x).
std::string fix_text(std::string_view text, const RuleSet& rules);

struct FileError {
  std::string file;
  std::string message;
};

struct LintReport {
  std::vector<LintViolation> violations;
  std::vector<FileError> errors;  // IoError per file; other files still processed
  std::vector<std::string> rewritten;
};

LintReport lint_check(const std::vector<std::filesystem::path>& files,
                      const RuleSet& rules);
// Rewrites files in place; `violations` holds what remains after fixing.
LintReport lint_fix(const std::vector<std::filesystem::path>& files,
                    const RuleSet& rules);

// Source of per-file message counts for grading.
class MessageAnalyzer {
 public:
  virtual ~MessageAnalyzer() = default;
  virtual std::size_t count_messages(const std::string& file, std::string_view text) = 0;
};

// Counts lint violations with the built-in rule set.
class LintAnalyzer : public MessageAnalyzer {
 public:
  explicit LintAnalyzer(RuleSet rules = RuleSet::all()) : rules_(std::move(rules)) {}
  std::size_t count_messages(const std::string& file, std::string_view text) override;

 private:
  RuleSet rules_;
};

// `.m` files below `root`, sorted by relative path.
std::vector<std::filesystem::path> find_sources(const std::filesystem::path& root,
                                                std::string_view extension = ".m");

// Classifies every source below `root`; file names are relative to `root`.
std::vector<LineClassification> classify_tree(const std::filesystem::path& root);

// Reads an execution trace: JSON lines of {"file": path, "line": n}.
// Absolute paths are made relative to `root`.
// Throws Error{IoError, MalformedPayload}.
std::set<ExecutedLine> read_trace(const std::filesystem::path& trace,
                                  const std::filesystem::path& root);

std::string coverage_json(const CoverageReport& report);
std::string coverage_table(const CoverageReport& report);

std::string read_file(const std::filesystem::path& path);  // Throws Error{IoError}

}  // namespace forgeci::quality

#endif  // FORGECI_QUALITY_HPP_
