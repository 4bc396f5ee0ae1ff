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

#include "forgeci/dialect.hpp"

#include <algorithm>
#include <cctype>

#include "forgeci/error.hpp"
#include "forgeci/text.hpp"

namespace forgeci::dialect {
namespace {

bool is_key_char(char c, bool first) {
  const auto u = static_cast<unsigned char>(c);
  return std::isalpha(u) || c == '_' || (!first && std::isdigit(u));
}

[[noreturn]] void fail(Errc code, int line, std::string_view what) {
  throw Error(code, "line " + std::to_string(line) + ": " + std::string(what));
}

}  // namespace

const Entry* Document::find(std::string_view key) const {
  auto it = std::find_if(entries.begin(), entries.end(),
                         [&](const Entry& e) { return e.key == key; });
  return it == entries.end() ? nullptr : &*it;
}

Document parse(std::string_view text) {
  Document doc;
  Item* current_item = nullptr;
  int line_no = 0;

  for (std::string_view raw : text::split_lines(text)) {
    ++line_no;
    if (!raw.empty() && raw.back() == '\r') raw.remove_suffix(1);

    const std::size_t indent = raw.find_first_not_of(" \t");
    if (indent == std::string_view::npos) continue;  // blank
    if (raw.substr(0, indent).find('\t') != std::string_view::npos) {
      fail(Errc::IndentationError, line_no, "tab in indentation");
    }
    const std::string_view body = text::rtrim(raw.substr(indent));
    if (body.front() == '#') continue;

    if (indent == 0) {
      std::size_t k = 0;
      while (k < body.size() && is_key_char(body[k], k == 0)) ++k;
      if (k == 0 || k >= body.size() || body[k] != ':') {
        fail(Errc::IndentationError, line_no, "expected 'key:' at column 1");
      }
      Entry entry;
      entry.key = std::string(body.substr(0, k));
      entry.line = line_no;
      const std::string_view value = text::trim(body.substr(k + 1));
      if (!value.empty()) entry.scalar = std::string(value);
      if (doc.find(entry.key) != nullptr) {
        fail(Errc::DuplicateKey, line_no, entry.key);
      }
      doc.entries.push_back(std::move(entry));
      current_item = nullptr;
      continue;
    }

    if (indent == static_cast<std::size_t>(kIndentStep) &&
        (body == "-" || body.starts_with("- "))) {
      if (doc.entries.empty() || !doc.entries.back().is_sequence()) {
        fail(Errc::IndentationError, line_no, "sequence item without a key");
      }
      const std::string_view item_text =
          body.size() > 1 ? text::trim(body.substr(2)) : std::string_view{};
      if (item_text.empty()) fail(Errc::EmptyCommand, line_no, "empty item");
      doc.entries.back().items.push_back(Item{std::string(item_text), line_no});
      current_item = &doc.entries.back().items.back();
      continue;
    }

    if (indent > static_cast<std::size_t>(kIndentStep) && current_item) {
      // Continuation: strip the item's content column (dash indent + 2).
      const std::size_t strip = std::min<std::size_t>(indent, 2 * kIndentStep);
      current_item->text += '\n';
      current_item->text += text::rtrim(raw.substr(strip));
      continue;
    }

    fail(Errc::IndentationError, line_no,
         "unexpected indentation of " + std::to_string(indent));
  }
  return doc;
}

std::string render(const Document& doc) {
  std::string out;
  bool first = true;
  for (const Entry& entry : doc.entries) {
    if (!first) out += '\n';
    first = false;
    out += entry.key;
    out += ':';
    if (entry.scalar) {
      out += ' ';
      out += *entry.scalar;
      out += '\n';
      continue;
    }
    out += '\n';
    for (const Item& item : entry.items) {
      bool head = true;
      for (std::string_view line : text::split_lines(item.text)) {
        out += head ? "  - " : "    ";
        out += line;
        out += '\n';
        head = false;
      }
    }
  }
  return out;
}

}  // namespace forgeci::dialect
