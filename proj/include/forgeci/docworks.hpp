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

// Docstring extraction from MATLAB function headers and a static Markdown
// site built from the result.
//
// A header is the run of `%` comment lines right below a `function` line.
// Inside it, `% KEYWORD:` opens a block, the following non-empty comment
// lines belong to it, and an empty comment line closes it:
//
//   function out = addTwo(in)
//   % Adds two to its input.
//   %
//   % USAGE:
//   %    out = addTwo(in)
//   %
//   % INPUT:
//   %    in:   a number

#ifndef FORGECI_DOCWORKS_HPP_
#define FORGECI_DOCWORKS_HPP_

#include <array>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace forgeci::docworks {

inline constexpr std::array<std::string_view, 8> kKeywords = {
    "USAGE", "INPUT", "INPUTS", "OUTPUT", "OUTPUTS", "EXAMPLE", "NOTE", "AUTHOR"};

struct DocBlock {
  std::string keyword;
  std::vector<std::string> lines;

  bool operator==(const DocBlock&) const = default;
};

struct DocRecord {
  std::string function_name;
  std::string signature;
  std::vector<std::string> preamble;
  std::vector<DocBlock> blocks;
  // Comment text after a closed block that opens no new block.
  std::vector<std::string> trailing;
  std::string source_path;
  int line = 0;
};

struct Diagnostic {
  int line = 0;
  std::string message;
};

struct Extraction {
  std::vector<DocRecord> records;
  std::vector<Diagnostic> warnings;
};

// One record per function signature. Throws Error{EmptyBlock} when a keyword
// line is not followed by at least one non-empty line.
std::vector<DocRecord> extract_docstrings(std::string_view source,
                                          std::string source_path = {});

// Never throws on content: empty blocks are dropped and reported as warnings.
Extraction extract_docstrings_lenient(std::string_view source,
                                      std::string source_path = {});

struct SiteFile {
  std::string name;  // relative to the output directory
  std::string content;
};

struct Site {
  std::vector<SiteFile> files;  // index.md first, then pages by function name
  std::vector<std::string> warnings;
};

// Pure rendering. Duplicate function names get a numeric page suffix and a
// DuplicateFunctionName warning. Throws Error{InvalidArgument} for no records.
Site render_site(std::vector<DocRecord> records);

// render_site + write every file below `out_dir`. Throws Error{IoError}.
Site build_site(std::vector<DocRecord> records, const std::filesystem::path& out_dir);

}  // namespace forgeci::docworks

#endif  // FORGECI_DOCWORKS_HPP_
