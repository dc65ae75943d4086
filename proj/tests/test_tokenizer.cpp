#include <gtest/gtest.h>

#include "deepnote/tokenizer.hpp"

using deepnote::count_tokens;
using deepnote::tokenize;

TEST(Tokenizer, LowercasesAndSplitsOnPunctuation) {
  EXPECT_EQ(tokenize("Hello, World! It's 2024."),
            (std::vector<std::string>{"hello", "world", "it", "s", "2024"}));
}

TEST(Tokenizer, EmptyAndSeparatorOnly) {
  EXPECT_TRUE(tokenize("").empty());
  EXPECT_TRUE(tokenize(" \t--\n...").empty());
  EXPECT_EQ(count_tokens("a b  c"), 3u);
}

TEST(Tokenizer, KeepsUtf8WordsWhole) {
  const auto t = tokenize("Kraków and Gdańsk");
  ASSERT_EQ(t.size(), 3u);
  EXPECT_EQ(t[0], "krak\xc3\xb3w");
  EXPECT_EQ(t[2], "gda\xc5\x84sk");
}
