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

#include "forgeci/docworks.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <optional>

#include "forgeci/error.hpp"
#include "forgeci/text.hpp"

namespace forgeci::docworks {

namespace fs = std::filesystem;

namespace {

bool is_ident_char(char c) {
  return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') ||
         c == '_';
}

bool is_family(std::string_view keyword) {
  return keyword.starts_with("INPUT") || keyword.starts_with("OUTPUT");
}

// `function [a, b] = name(x)` -> "name"; nullopt if `line` is no signature.
std::optional<std::string> function_name(std::string_view line) {
  std::string_view body = text::ltrim(line);
  constexpr std::string_view kFunction = "function";
  if (!body.starts_with(kFunction)) return std::nullopt;
  if (body.size() > kFunction.size() && is_ident_char(body[kFunction.size()])) {
    return std::nullopt;
  }
  body.remove_prefix(kFunction.size());
  body = body.substr(0, body.find_first_of("(;%"));
  if (auto eq = body.find('='); eq != std::string_view::npos) body.remove_prefix(eq + 1);
  body = text::trim(body);
  if (body.empty()) return std::nullopt;
  for (char c : body) {
    if (!is_ident_char(c) && c != '.') return std::nullopt;
  }
  return std::string(body);
}

bool is_comment(std::string_view line) {
  const std::string_view body = text::ltrim(line);
  return !body.empty() && body.front() == '%';
}

// Drops the leading `%` and up to four spaces, and trailing blanks.
std::string comment_text(std::string_view line) {
  std::string_view body = text::ltrim(line);
  body.remove_prefix(1);
  for (int i = 0; i < 4 && !body.empty() && body.front() == ' '; ++i) body.remove_prefix(1);
  return std::string(text::rtrim(body));
}

struct KeywordLine {
  std::string keyword;
  std::string rest;
};

std::optional<KeywordLine> keyword_of(const std::string& content) {
  const std::string_view t = text::trim(content);
  for (std::string_view kw : kKeywords) {
    if (t.size() > kw.size() && t.starts_with(kw) && t[kw.size()] == ':') {
      return KeywordLine{std::string(kw), std::string(text::trim(t.substr(kw.size() + 1)))};
    }
  }
  return std::nullopt;
}

class HeaderParser {
 public:
  HeaderParser(DocRecord& record, std::vector<Diagnostic>& warnings, bool strict)
      : record_(record), warnings_(warnings), strict_(strict) {}

  void feed(int line_no, const std::string& content) {
    if (auto kw = keyword_of(content)) {
      close(line_no);
      open_ = Open{kw->keyword, line_no, {}};
      if (!kw->rest.empty()) open_->lines.push_back(kw->rest);
      after_block_ = false;
      return;
    }
    if (text::trim(content).empty()) {
      if (open_) {
        close(line_no);
        after_block_ = true;
      } else if (!after_block_ && !record_.preamble.empty() &&
                 !record_.preamble.back().empty()) {
        record_.preamble.push_back("");
      }
      return;
    }
    if (open_) {
      open_->lines.push_back(content);
    } else if (after_block_) {
      record_.trailing.push_back(content);
    } else {
      record_.preamble.push_back(content);
    }
  }

  void finish(int line_no) {
    close(line_no);
    while (!record_.preamble.empty() && record_.preamble.back().empty()) {
      record_.preamble.pop_back();
    }
  }

 private:
  struct Open {
    std::string keyword;
    int line = 0;
    std::vector<std::string> lines;
  };

  void close(int /*line_no*/) {
    if (!open_) return;
    Open block = std::move(*open_);
    open_.reset();
    if (block.lines.empty()) {
      const std::string what =
          block.keyword + " at line " + std::to_string(block.line) + " has no content";
      if (strict_) throw Error(Errc::EmptyBlock, what);
      warnings_.push_back({block.line, "EmptyBlock: " + what});
      return;
    }
    if (!is_family(block.keyword)) {
      auto it = std::find_if(record_.blocks.begin(), record_.blocks.end(),
                             [&](const DocBlock& b) { return b.keyword == block.keyword; });
      if (it != record_.blocks.end()) {
        warnings_.push_back({block.line, "repeated " + block.keyword +
                                             " block merged into the first one"});
        it->lines.insert(it->lines.end(), block.lines.begin(), block.lines.end());
        return;
      }
    }
    record_.blocks.push_back(DocBlock{block.keyword, std::move(block.lines)});
  }

  DocRecord& record_;
  std::vector<Diagnostic>& warnings_;
  bool strict_;
  std::optional<Open> open_;
  bool after_block_ = false;
};

Extraction extract(std::string_view source, const std::string& source_path, bool strict) {
  Extraction out;
  const auto lines = text::split_lines(source);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    auto name = function_name(lines[i]);
    if (!name) continue;
    DocRecord record;
    record.function_name = *name;
    record.signature = std::string(text::trim(lines[i]));
    record.source_path = source_path;
    record.line = static_cast<int>(i) + 1;
    HeaderParser parser(record, out.warnings, strict);
    std::size_t j = i + 1;
    for (; j < lines.size() && is_comment(lines[j]); ++j) {
      parser.feed(static_cast<int>(j) + 1, comment_text(lines[j]));
    }
    parser.finish(static_cast<int>(j) + 1);
    out.records.push_back(std::move(record));
    i = j - 1;
  }
  return out;
}

std::string page_name(std::string_view function) {
  std::string out;
  for (char c : function) out += (is_ident_char(c) || c == '.' || c == '-') ? c : '_';
  return out;
}

std::string render_page(const DocRecord& r) {
  std::string out;
  out += "# " + r.function_name + "\n\n";
  out += "[Index](index.md)\n\n";
  if (!r.source_path.empty()) out += "Source: `" + r.source_path + "`\n\n";
  out += "```matlab\n" + r.signature + "\n```\n";
  if (!r.preamble.empty()) {
    out += '\n';
    for (const auto& l : r.preamble) out += l.empty() ? "\n" : l + "\n";
  }
  for (const DocBlock& b : r.blocks) {
    out += "\n## " + b.keyword + "\n\n";
    if (b.keyword == "EXAMPLE" || b.keyword == "USAGE") {
      out += "```matlab\n";
      for (const auto& l : b.lines) out += l + "\n";
      out += "```\n";
    } else if (b.keyword == "NOTE") {
      out += "> [!NOTE]\n";
      for (const auto& l : b.lines) out += "> " + l + "\n";
    } else {
      for (const auto& l : b.lines) out += l + "  \n";
    }
  }
  if (!r.trailing.empty()) {
    out += '\n';
    for (const auto& l : r.trailing) out += l + "\n";
  }
  return out;
}

std::string summary_of(const DocRecord& r) {
  return r.preamble.empty() ? std::string{} : r.preamble.front();
}

}  // namespace

std::vector<DocRecord> extract_docstrings(std::string_view source, std::string source_path) {
  return extract(source, source_path, /*strict=*/true).records;
}

Extraction extract_docstrings_lenient(std::string_view source, std::string source_path) {
  return extract(source, source_path, /*strict=*/false);
}

Site render_site(std::vector<DocRecord> records) {
  if (records.empty()) throw Error(Errc::InvalidArgument, "no documented functions");
  std::stable_sort(records.begin(), records.end(), [](const DocRecord& a, const DocRecord& b) {
    if (a.function_name != b.function_name) return a.function_name < b.function_name;
    if (a.source_path != b.source_path) return a.source_path < b.source_path;
    return a.line < b.line;
  });

  Site site;
  std::map<std::string, int> used;
  std::string index = "# Function reference\n\n";
  std::vector<SiteFile> pages;
  for (const DocRecord& r : records) {
    std::string base = page_name(r.function_name);
    const int n = ++used[base];
    if (n > 1) {
      site.warnings.push_back(std::string(errc_name(Errc::DuplicateFunctionName)) + ": " +
                              r.function_name + " (" + r.source_path + ") written as " +
                              base + "-" + std::to_string(n) + ".md");
      base += "-" + std::to_string(n);
    }
    const std::string file = base + ".md";
    index += "- [" + r.function_name + "](" + file + ")";
    const std::string summary = summary_of(r);
    if (!summary.empty()) index += ": " + summary;
    index += "\n";
    pages.push_back(SiteFile{file, render_page(r)});
  }
  site.files.push_back(SiteFile{"index.md", std::move(index)});
  for (auto& p : pages) site.files.push_back(std::move(p));
  return site;
}

Site build_site(std::vector<DocRecord> records, const fs::path& out_dir) {
  Site site = render_site(std::move(records));
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) throw Error(Errc::IoError, out_dir.string() + ": " + ec.message());
  for (const SiteFile& f : site.files) {
    std::ofstream out(out_dir / f.name, std::ios::binary | std::ios::trunc);
    out << f.content;
    out.close();
    if (!out) throw Error(Errc::IoError, "cannot write " + (out_dir / f.name).string());
  }
  return site;
}

}  // namespace forgeci::docworks
