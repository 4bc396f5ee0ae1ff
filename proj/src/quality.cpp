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

#include "forgeci/quality.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "forgeci/error.hpp"
#include "forgeci/text.hpp"
#include "json.hpp"

namespace forgeci::quality {

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

bool is_ident_char(char c) {
  return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') ||
         c == '_';
}

}  // namespace

LineClassification classify_executable(std::string_view text, std::string file) {
  LineClassification out;
  out.file = std::move(file);
  int line_no = 0;
  for (std::string_view line : text::split_lines(text)) {
    ++line_no;
    const std::string_view body = text::ltrim(line);
    if (body.empty() || body.front() == '%') continue;
    std::size_t n = 0;
    while (n < body.size() && is_ident_char(body[n])) ++n;
    const std::string_view token = body.substr(0, n);
    if (std::find(kNonExecutableKeywords.begin(), kNonExecutableKeywords.end(), token) !=
        kNonExecutableKeywords.end()) {
      continue;
    }
    out.executable.insert(line_no);
  }
  out.total_lines = line_no;
  return out;
}

CoverageReport compute_coverage(const std::vector<LineClassification>& classifications,
                                const std::set<ExecutedLine>& executed) {
  std::map<std::string, const LineClassification*> by_file;
  for (const auto& c : classifications) by_file[c.file] = &c;

  std::map<std::string, std::size_t> hits;
  CoverageReport report;
  for (const auto& [file, line] : executed) {
    auto it = by_file.find(file);
    if (it == by_file.end()) throw Error(Errc::UnknownFile, file);
    if (it->second->executable.contains(line)) {
      ++hits[file];
    } else {
      ++report.ignored_hits;
    }
  }
  for (const auto& [file, c] : by_file) {
    FileCoverage fc{file, c->executable.size(), hits[file]};
    report.total_executable += fc.executable;
    report.total_executed += fc.executed;
    report.files.push_back(std::move(fc));
  }
  if (report.total_executable == 0) {
    report.empty_denominator = true;
    report.percent = 100.0;
  } else {
    report.percent = 100.0 * static_cast<double>(report.total_executed) /
                     static_cast<double>(report.total_executable);
  }
  return report;
}

char to_letter(double percent) {
  if (std::isnan(percent) || percent < 0.0) {
    throw Error(Errc::NegativePercent, std::to_string(percent));
  }
  if (percent < 3.0) return 'A';
  if (percent < 6.0) return 'B';
  if (percent < 9.0) return 'C';
  if (percent < 12.0) return 'D';
  if (percent <= 15.0) return 'E';
  return 'F';
}

GradeReport grade(const std::map<std::string, std::size_t>& message_counts,
                  const std::vector<LineClassification>& classifications) {
  std::set<std::string> known;
  GradeReport report;
  for (const auto& c : classifications) {
    known.insert(c.file);
    report.total_executable += c.executable.size();
  }
  for (const auto& [file, count] : message_counts) {
    if (!known.contains(file)) throw Error(Errc::UnknownFile, file);
    report.total_messages += count;
  }
  if (report.total_executable == 0) {
    throw Error(Errc::EmptyCodebase, "no executable lines");
  }
  report.percent = 100.0 * static_cast<double>(report.total_messages) /
                   static_cast<double>(report.total_executable);
  report.letter = to_letter(report.percent);
  return report;
}

// ---------------------------------------------------------------------------
// Lint

namespace {

constexpr Rule kAllRules[] = {Rule::kTrailingWhitespace, Rule::kTabs, Rule::kLineLength,
                              Rule::kMissingFinalNewline, Rule::kSpaceAfterComma};

constexpr std::string_view kTrailingBlank = " \t\r\f\v";

std::size_t utf8_length(std::string_view s) {
  return static_cast<std::size_t>(std::count_if(
      s.begin(), s.end(), [](char c) { return (static_cast<unsigned char>(c) & 0xC0) != 0x80; }));
}

// Offsets of commas in code (outside strings and comments) that are directly
// followed by a non-blank character.
std::vector<std::size_t> tight_commas(std::string_view line) {
  std::vector<std::size_t> out;
  const std::string_view trimmed = text::rtrim(line);
  char quote = 0;
  char prev = 0;  // previous non-blank code character
  for (std::size_t i = 0; i < trimmed.size(); ++i) {
    const char c = trimmed[i];
    if (quote) {
      if (c == quote) {
        if (i + 1 < trimmed.size() && trimmed[i + 1] == quote) {
          ++i;  // doubled quote inside a literal
        } else {
          quote = 0;
          prev = c;
        }
      }
      continue;
    }
    if (c == '%') break;
    if (c == '"') {
      quote = c;
      continue;
    }
    if (c == '\'') {
      // A quote after a value is the transpose operator.
      const bool transpose = is_ident_char(prev) || prev == ')' || prev == ']' ||
                             prev == '}' || prev == '.' || prev == '\'';
      if (!transpose) {
        quote = c;
        continue;
      }
    }
    if (c == ',' && i + 1 < trimmed.size() && trimmed[i + 1] != ' ' &&
        trimmed[i + 1] != '\t') {
      out.push_back(i);
    }
    if (c != ' ' && c != '\t') prev = c;
  }
  return out;
}

}  // namespace

std::string_view rule_id(Rule rule) {
  switch (rule) {
    case Rule::kTrailingWhitespace: return "trailing-whitespace";
    case Rule::kTabs: return "tabs";
    case Rule::kLineLength: return "line-length";
    case Rule::kMissingFinalNewline: return "missing-final-newline";
    case Rule::kSpaceAfterComma: return "space-after-comma";
  }
  return "";
}

bool rule_fixable(Rule rule) { return rule != Rule::kLineLength; }

RuleSet RuleSet::all() {
  RuleSet r;
  r.rules.insert(std::begin(kAllRules), std::end(kAllRules));
  return r;
}

RuleSet RuleSet::from_ids(const std::vector<std::string>& ids) {
  RuleSet r;
  for (const std::string& id : ids) {
    auto it = std::find_if(std::begin(kAllRules), std::end(kAllRules),
                           [&](Rule rule) { return rule_id(rule) == id; });
    if (it == std::end(kAllRules)) throw Error(Errc::InvalidArgument, "unknown rule " + id);
    r.rules.insert(*it);
  }
  return r;
}

std::vector<LintViolation> check_text(const std::string& file, std::string_view text,
                                      const RuleSet& rules) {
  std::vector<LintViolation> out;
  auto report = [&](int line, Rule rule, std::string message) {
    out.push_back(LintViolation{file, line, std::string(rule_id(rule)), std::move(message),
                                rule_fixable(rule)});
  };
  const auto lines = text::split_lines(text);
  int line_no = 0;
  for (std::string_view line : lines) {
    ++line_no;
    if (rules.has(Rule::kTrailingWhitespace) && !line.empty() &&
        kTrailingBlank.find(line.back()) != std::string_view::npos) {
      report(line_no, Rule::kTrailingWhitespace, "trailing whitespace");
    }
    if (rules.has(Rule::kTabs) && line.find('\t') != std::string_view::npos) {
      report(line_no, Rule::kTabs, "tab character; use 4 spaces");
    }
    if (rules.has(Rule::kLineLength)) {
      std::string_view content = line;
      if (!content.empty() && content.back() == '\r') content.remove_suffix(1);
      const std::size_t len = utf8_length(content);
      if (len > rules.max_line_length) {
        report(line_no, Rule::kLineLength,
               "line is " + std::to_string(len) + " characters (max " +
                   std::to_string(rules.max_line_length) + ")");
      }
    }
    if (rules.has(Rule::kSpaceAfterComma)) {
      for (std::size_t pos : tight_commas(line)) {
        report(line_no, Rule::kSpaceAfterComma,
               "missing space after comma at column " + std::to_string(pos + 1));
      }
    }
  }
  if (rules.has(Rule::kMissingFinalNewline) && !text.empty() && text.back() != '\n') {
    report(line_no, Rule::kMissingFinalNewline, "file does not end with a newline");
  }
  return out;
}

std::string fix_text(std::string_view text, const RuleSet& rules) {
  std::string out;
  out.reserve(text.size());
  const auto lines = text::split_lines(text);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    std::string line(lines[i]);
    if (rules.has(Rule::kTabs)) {
      std::string expanded;
      for (char c : line) {
        if (c == '\t') {
          expanded += "    ";
        } else {
          expanded += c;
        }
      }
      line = std::move(expanded);
    }
    if (rules.has(Rule::kTrailingWhitespace)) {
      const auto end = line.find_last_not_of(kTrailingBlank);
      line.erase(end == std::string::npos ? 0 : end + 1);
    }
    if (rules.has(Rule::kSpaceAfterComma)) {
      const auto commas = tight_commas(line);
      for (auto it = commas.rbegin(); it != commas.rend(); ++it) line.insert(*it + 1, " ");
    }
    out += line;
    const bool last = i + 1 == lines.size();
    if (!last || text.back() == '\n' || rules.has(Rule::kMissingFinalNewline)) out += '\n';
  }
  return out;
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::IoError, "cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) throw Error(Errc::IoError, "read failed: " + path.string());
  return ss.str();
}

LintReport lint_check(const std::vector<fs::path>& files, const RuleSet& rules) {
  LintReport report;
  for (const fs::path& f : files) {
    try {
      auto v = check_text(f.string(), read_file(f), rules);
      report.violations.insert(report.violations.end(), v.begin(), v.end());
    } catch (const Error& e) {
      report.errors.push_back({f.string(), e.what()});
    }
  }
  return report;
}

LintReport lint_fix(const std::vector<fs::path>& files, const RuleSet& rules) {
  LintReport report;
  for (const fs::path& f : files) {
    try {
      const std::string original = read_file(f);
      const std::string fixed = fix_text(original, rules);
      if (fixed != original) {
        std::ofstream out(f, std::ios::binary | std::ios::trunc);
        out << fixed;
        out.close();
        if (!out) throw Error(Errc::IoError, "cannot write " + f.string());
        report.rewritten.push_back(f.string());
      }
      auto v = check_text(f.string(), fixed, rules);
      report.violations.insert(report.violations.end(), v.begin(), v.end());
    } catch (const Error& e) {
      report.errors.push_back({f.string(), e.what()});
    }
  }
  return report;
}

std::size_t LintAnalyzer::count_messages(const std::string& file, std::string_view text) {
  return check_text(file, text, rules_).size();
}

std::vector<fs::path> find_sources(const fs::path& root, std::string_view extension) {
  std::vector<fs::path> out;
  std::error_code ec;
  if (!fs::is_directory(root, ec)) {
    throw Error(Errc::IoError, "not a directory: " + root.string());
  }
  for (auto it = fs::recursive_directory_iterator(root, ec);
       !ec && it != fs::recursive_directory_iterator(); it.increment(ec)) {
    if (it->is_regular_file() && it->path().extension() == extension) {
      out.push_back(it->path());
    }
  }
  if (ec) throw Error(Errc::IoError, root.string() + ": " + ec.message());
  std::sort(out.begin(), out.end(), [&](const fs::path& a, const fs::path& b) {
    return a.lexically_relative(root).generic_string() <
           b.lexically_relative(root).generic_string();
  });
  return out;
}

std::vector<LineClassification> classify_tree(const fs::path& root) {
  std::vector<LineClassification> out;
  for (const fs::path& p : find_sources(root)) {
    out.push_back(classify_executable(read_file(p), p.lexically_relative(root).generic_string()));
  }
  return out;
}

std::set<ExecutedLine> read_trace(const fs::path& trace, const fs::path& root) {
  std::ifstream in(trace, std::ios::binary);
  if (!in) throw Error(Errc::IoError, "cannot read " + trace.string());
  std::set<ExecutedLine> out;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (text::trim(line).empty()) continue;
    json j = json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object() || !j.contains("file") ||
        !j["file"].is_string() || !j.contains("line") || !j["line"].is_number_integer()) {
      throw Error(Errc::MalformedPayload,
                  trace.string() + ":" + std::to_string(line_no) +
                      ": expected {\"file\": path, \"line\": n}");
    }
    fs::path file = j["file"].get<std::string>();
    if (file.is_absolute()) file = file.lexically_relative(root);
    out.emplace(file.lexically_normal().generic_string(), j["line"].get<int>());
  }
  return out;
}

std::string coverage_json(const CoverageReport& report) {
  json files = json::array();
  for (const auto& f : report.files) {
    files.push_back({{"file", f.file}, {"executable", f.executable}, {"executed", f.executed}});
  }
  json j = {{"files", files},
            {"total_executable", report.total_executable},
            {"total_executed", report.total_executed},
            {"ignored_hits", report.ignored_hits},
            {"percent", report.percent},
            {"empty_denominator", report.empty_denominator}};
  return j.dump(2);
}

std::string coverage_table(const CoverageReport& report) {
  std::size_t width = 5;
  for (const auto& f : report.files) width = std::max(width, f.file.size());
  std::ostringstream out;
  auto row = [&](const std::string& name, std::size_t exec, std::size_t hit, double pct) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "  %10zu  %10zu  %7.2f%%", exec, hit, pct);
    out << name << std::string(width - name.size(), ' ') << buf << '\n';
  };
  out << "file" << std::string(width - 4, ' ') << "  executable    executed  percent\n";
  for (const auto& f : report.files) {
    const double pct = f.executable == 0 ? 100.0 : 100.0 * f.executed / f.executable;
    row(f.file, f.executable, f.executed, pct);
  }
  row("TOTAL", report.total_executable, report.total_executed, report.percent);
  if (report.empty_denominator) out << "note: no executable lines (empty denominator)\n";
  return out.str();
}

}  // namespace forgeci::quality
