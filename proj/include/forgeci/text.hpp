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

#ifndef FORGECI_TEXT_HPP_
#define FORGECI_TEXT_HPP_

#include <string>
#include <string_view>
#include <vector>

namespace forgeci::text {

inline constexpr std::string_view kBlank = " \t\r\n\f\v";

inline std::string_view ltrim(std::string_view s) {
  const auto p = s.find_first_not_of(kBlank);
  return p == std::string_view::npos ? std::string_view{} : s.substr(p);
}

inline std::string_view rtrim(std::string_view s) {
  const auto p = s.find_last_not_of(kBlank);
  return p == std::string_view::npos ? std::string_view{} : s.substr(0, p + 1);
}

inline std::string_view trim(std::string_view s) { return rtrim(ltrim(s)); }

// Splits on '\n'. A trailing newline terminates the last line rather than
// opening an empty one, so "a\nb\n" and "a\nb" both yield two lines.
inline std::vector<std::string_view> split_lines(std::string_view s) {
  std::vector<std::string_view> lines;
  std::size_t start = 0;
  while (start < s.size()) {
    const auto nl = s.find('\n', start);
    if (nl == std::string_view::npos) {
      lines.push_back(s.substr(start));
      break;
    }
    lines.push_back(s.substr(start, nl - start));
    start = nl + 1;
  }
  return lines;
}

inline std::vector<std::string_view> split_words(std::string_view s) {
  std::vector<std::string_view> words;
  std::size_t i = 0;
  while (i < s.size()) {
    i = s.find_first_not_of(" \t", i);
    if (i == std::string_view::npos) break;
    auto j = s.find_first_of(" \t", i);
    if (j == std::string_view::npos) j = s.size();
    words.push_back(s.substr(i, j - i));
    i = j;
  }
  return words;
}

inline std::vector<std::string> split(std::string_view s, char sep) {
  std::vector<std::string> parts;
  std::size_t start = 0;
  while (true) {
    const auto p = s.find(sep, start);
    parts.emplace_back(s.substr(start, p - start));
    if (p == std::string_view::npos) break;
    start = p + 1;
  }
  return parts;
}

inline bool is_hex(std::string_view s) {
  for (char c : s) {
    if (!((c >= '0' && c <= '9') || (c >= 'a' && c <= 'f'))) return false;
  }
  return !s.empty();
}

}  // namespace forgeci::text

#endif  // FORGECI_TEXT_HPP_
