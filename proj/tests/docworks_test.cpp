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

#include <gtest/gtest.h>

#include <random>

#include "test_util.hpp"

namespace forgeci::docworks {
namespace {

using testing::error_of;

const char* kAddTwo =
    "function out = addTwo(in)\n"
    "% Adds two to its input.\n"
    "%\n"
    "% USAGE:\n"
    "%    out = addTwo(in)\n"
    "%\n"
    "% INPUT:\n"
    "%    in: a number\n"
    "out = in + 2;\n";

TEST(Extract, UsageAndInputBlocks) {
  const auto records = extract_docstrings(kAddTwo, "src/addTwo.m");
  ASSERT_EQ(records.size(), 1u);
  const DocRecord& r = records[0];
  EXPECT_EQ(r.function_name, "addTwo");
  EXPECT_EQ(r.signature, "function out = addTwo(in)");
  EXPECT_EQ(r.preamble, std::vector<std::string>{"Adds two to its input."});
  ASSERT_EQ(r.blocks.size(), 2u);
  EXPECT_EQ(r.blocks[0], (DocBlock{"USAGE", {"out = addTwo(in)"}}));
  EXPECT_EQ(r.blocks[1], (DocBlock{"INPUT", {"in: a number"}}));
  EXPECT_EQ(r.line, 1);
}

TEST(Extract, NoKeywordsIsPreambleOnly) {
  const auto records = extract_docstrings("function f\n% Just text.\n% More text.\n");
  ASSERT_EQ(records.size(), 1u);
  EXPECT_TRUE(records[0].blocks.empty());
  EXPECT_EQ(records[0].preamble.size(), 2u);
}

TEST(Extract, EmptyBlockIsAnError) {
  const char* src = "function f\n% USAGE:\n%\n% INPUT:\n%    x\n";
  EXPECT_EQ(error_of([&] { extract_docstrings(src); }), Errc::EmptyBlock);
  const Extraction lenient = extract_docstrings_lenient(src);
  ASSERT_EQ(lenient.records.size(), 1u);
  EXPECT_EQ(lenient.records[0].blocks.size(), 1u);
  EXPECT_EQ(lenient.warnings.size(), 1u);
}

TEST(Extract, SignatureForms) {
  const auto r = extract_docstrings(
      "function [a, b] = multi(x, y)\n% m\nfunction noargs\n% n\n"
      "  function y=nested(x) % trailing\n% k\nfunctional = 3;\n");
  ASSERT_EQ(r.size(), 3u);
  EXPECT_EQ(r[0].function_name, "multi");
  EXPECT_EQ(r[1].function_name, "noargs");
  EXPECT_EQ(r[2].function_name, "nested");
}

TEST(Extract, InlineTextAndTrailing) {
  const auto r = extract_docstrings(
      "function f\n% NOTE: careful\n%    really\n%\n% Closing remark.\n% AUTHOR:\n%   me\n")[0];
  ASSERT_EQ(r.blocks.size(), 2u);
  EXPECT_EQ(r.blocks[0], (DocBlock{"NOTE", {"careful", "really"}}));
  EXPECT_EQ(r.blocks[1], (DocBlock{"AUTHOR", {"me"}}));
  EXPECT_EQ(r.trailing, std::vector<std::string>{"Closing remark."});
}

// Independent model of the block rules for headers built from three kinds of
// comment lines: keyword openers, content and empty comments.
struct Line {
  enum Kind { kKeyword, kContent, kEmpty } kind;
  std::string text;
};

std::vector<DocBlock> oracle_blocks(const std::vector<Line>& header, bool* has_empty) {
  std::vector<DocBlock> blocks;
  std::optional<DocBlock> open;
  *has_empty = false;
  auto close = [&] {
    if (!open) return;
    if (open->lines.empty()) {
      *has_empty = true;
    } else {
      const bool family = open->keyword.rfind("INPUT", 0) == 0 ||
                          open->keyword.rfind("OUTPUT", 0) == 0;
      auto it = std::find_if(blocks.begin(), blocks.end(),
                             [&](const DocBlock& b) { return b.keyword == open->keyword; });
      if (!family && it != blocks.end()) {
        it->lines.insert(it->lines.end(), open->lines.begin(), open->lines.end());
      } else {
        blocks.push_back(*open);
      }
    }
    open.reset();
  };
  for (const Line& l : header) {
    if (l.kind == Line::kKeyword) {
      close();
      open = DocBlock{l.text, {}};
    } else if (l.kind == Line::kEmpty) {
      close();
    } else if (open) {
      open->lines.push_back(l.text);
    }
  }
  close();
  return blocks;
}

TEST(Extract, RandomHeadersMatchOracle) {
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 3000; ++trial) {
    std::vector<Line> header;
    std::string src = "function y = f(x)\n";
    const int n = static_cast<int>(rng() % 15);
    for (int i = 0; i < n; ++i) {
      switch (rng() % 3) {
        case 0: {
          const std::string kw(kKeywords[rng() % kKeywords.size()]);
          header.push_back({Line::kKeyword, kw});
          src += "% " + kw + ":\n";
          break;
        }
        case 1: {
          const std::string t = "text " + std::to_string(rng() % 100);
          header.push_back({Line::kContent, t});
          src += "%" + std::string(rng() % 5, ' ') + t + "\n";
          break;
        }
        default:
          header.push_back({Line::kEmpty, ""});
          src += rng() % 2 ? "%\n" : "%   \n";
      }
    }
    src += "y = x;\n";
    bool has_empty = false;
    const auto expected = oracle_blocks(header, &has_empty);
    const Extraction got = extract_docstrings_lenient(src);
    ASSERT_EQ(got.records.size(), 1u);
    ASSERT_EQ(got.records[0].blocks, expected) << src;
    if (has_empty) {
      ASSERT_EQ(error_of([&] { extract_docstrings(src); }), Errc::EmptyBlock);
    } else {
      ASSERT_EQ(extract_docstrings(src)[0].blocks, expected);
    }
  }
}

TEST(Extract, TotalOnArbitraryInput) {
  std::mt19937_64 rng(23);
  const std::string alphabet = "%: \nfunctionUSAGEINPUTNOTE=()[],xy\t\r";
  for (int i = 0; i < 10000; ++i) {
    std::string src;
    const std::size_t n = rng() % 120;
    for (std::size_t k = 0; k < n; ++k) src += alphabet[rng() % alphabet.size()];
    if (rng() % 2) src = "function f\n" + src;
    ASSERT_NO_THROW(extract_docstrings_lenient(src));
    try {
      extract_docstrings(src);
    } catch (const Error& e) {
      ASSERT_EQ(e.code(), Errc::EmptyBlock);
    }
  }
}

TEST(Site, RendersIndexAndPages) {
  auto records = extract_docstrings(kAddTwo, "src/addTwo.m");
  auto more = extract_docstrings(
      "function b = zeta(a)\n% Zeta.\n%\n% EXAMPLE:\n%    zeta(1)\n%\n% NOTE:\n%    hot\n");
  records.insert(records.end(), more.begin(), more.end());
  const Site site = render_site(records);
  ASSERT_EQ(site.files.size(), 3u);
  EXPECT_EQ(site.files[0].name, "index.md");
  EXPECT_EQ(site.files[1].name, "addTwo.md");
  EXPECT_EQ(site.files[2].name, "zeta.md");
  EXPECT_LT(site.files[0].content.find("addTwo.md"), site.files[0].content.find("zeta.md"));
  const std::string& zeta = site.files[2].content;
  EXPECT_NE(zeta.find("> [!NOTE]\n> hot"), std::string::npos);
  EXPECT_NE(zeta.find("```matlab\nzeta(1)\n```"), std::string::npos);
  EXPECT_NE(site.files[1].content.find("in: a number"), std::string::npos);
  EXPECT_TRUE(site.warnings.empty());

  std::reverse(records.begin(), records.end());
  const Site again = render_site(records);
  for (std::size_t i = 0; i < site.files.size(); ++i) {
    EXPECT_EQ(again.files[i].content, site.files[i].content);
  }
}

TEST(Site, DuplicateNamesSuffixed) {
  auto a = extract_docstrings("function f\n% one\n", "a/f.m");
  auto b = extract_docstrings("function f\n% two\n", "b/f.m");
  a.insert(a.end(), b.begin(), b.end());
  const Site site = render_site(a);
  ASSERT_EQ(site.files.size(), 3u);
  EXPECT_EQ(site.files[2].name, "f-2.md");
  ASSERT_EQ(site.warnings.size(), 1u);
  EXPECT_NE(site.warnings[0].find("DuplicateFunctionName"), std::string::npos);
  EXPECT_EQ(error_of([] { render_site({}); }), Errc::InvalidArgument);
}

TEST(Site, BuildWritesFilesAndBlockLinesAppearVerbatim) {
  testing::TempDir dir;
  const auto records = extract_docstrings(kAddTwo);
  const Site site = build_site(records, dir / "out");
  EXPECT_EQ(testing::slurp(dir / "out/addTwo.md"), site.files[1].content);
  for (const auto& block : records[0].blocks) {
    for (const auto& line : block.lines) {
      EXPECT_NE(site.files[1].content.find(line), std::string::npos);
    }
  }
}

}  // namespace
}  // namespace forgeci::docworks
