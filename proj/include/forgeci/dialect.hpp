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

// The flat configuration dialect shared by `travis.yml` and the master and
// agent config files. A document is an ordered list of top-level keys; each
// key holds either a scalar (`key: value`) or a sequence of items written as
// `  - text` one level (two spaces) deeper. Lines indented past the item's
// dash continue the current item, so a multi-line shell conditional stays one
// item. `#` comment lines and blank lines are ignored; tabs in indentation are
// rejected.

#ifndef FORGECI_DIALECT_HPP_
#define FORGECI_DIALECT_HPP_

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace forgeci::dialect {

inline constexpr int kIndentStep = 2;

struct Item {
  std::string text;  // continuation lines joined with '\n'
  int line = 0;      // 1-based line of the `- ` marker

  bool operator==(const Item& other) const { return text == other.text; }
};

struct Entry {
  std::string key;
  int line = 0;
  std::optional<std::string> scalar;
  std::vector<Item> items;

  bool is_sequence() const { return !scalar.has_value(); }
};

struct Document {
  std::vector<Entry> entries;

  const Entry* find(std::string_view key) const;
};

// Throws Error{IndentationError, DuplicateKey, EmptyCommand}.
Document parse(std::string_view text);

// Canonical rendering; parse(render(doc)) reproduces keys, scalars and items
// as long as no item line is blank or starts with '#'.
std::string render(const Document& doc);

}  // namespace forgeci::dialect

#endif  // FORGECI_DIALECT_HPP_
