#include <sstream>

#include <gtest/gtest.h>

#include "support.hpp"
#include "tokspace/bpe.hpp"
#include "tokspace/canonicity.hpp"

namespace tokspace {
namespace {

const BpeTables& toy() {
  static const BpeTables t = load_tables(testing::fixture("toy.json"));
  return t;
}

TEST(Canonicity, AllCanonicalGivesRateOne) {
  const auto& t = toy();
  std::vector<TokenIds> seqs;
  for (const char* s : {"abc", "abab", "cab", "bcbc", "a", "abcabcab"}) {
    seqs.push_back(canonical_encode(s, t.vocab, t.merges).ids);
  }
  const auto table = canonicity_rate(seqs, t.vocab, t.merges);
  EXPECT_EQ(table.sequences, seqs.size());
  ASSERT_FALSE(table.rows.empty());
  for (const auto& row : table.rows) {
    EXPECT_EQ(row.rate, 1.0) << row.length;
    EXPECT_EQ(row.canonical, row.sequences);
  }
}

TEST(Canonicity, BreakAtTokenGivesDecreasingRates) {
  const auto& t = toy();
  const TokenId a = *t.vocab.find("a"), b = *t.vocab.find("b"),
                ab = *t.vocab.find("ab");
  std::vector<TokenIds> seqs;
  for (int s = 0; s < 5; ++s) {
    TokenIds ids(s, ab);
    ids.push_back(a);
    ids.push_back(b);
    ids.insert(ids.end(), 4 - s, ab);
    EXPECT_EQ(canonical_prefix_length(ids, t.vocab, t.merges),
              std::size_t(s + 1));
    seqs.push_back(ids);
  }
  const auto table = canonicity_rate(seqs, t.vocab, t.merges);
  ASSERT_EQ(table.rows.size(), 6u);
  for (std::size_t l = 0; l < 6; ++l) {
    EXPECT_EQ(table.rows[l].length, l + 1);
    EXPECT_EQ(table.rows[l].sequences, 5u);
    EXPECT_DOUBLE_EQ(table.rows[l].rate, (5.0 - double(l)) / 5.0);
    if (l > 0) EXPECT_LT(table.rows[l].rate, table.rows[l - 1].rate);
  }
}

TEST(Canonicity, RatesOnlyCountLongEnoughSequences) {
  const auto& t = toy();
  const TokenId a = *t.vocab.find("a"), b = *t.vocab.find("b");
  const std::vector<TokenIds> seqs{{a}, {a, b}};
  const auto table = canonicity_rate(seqs, t.vocab, t.merges);
  ASSERT_EQ(table.rows.size(), 2u);
  EXPECT_EQ(table.rows[0].sequences, 2u);
  EXPECT_EQ(table.rows[0].rate, 1.0);
  EXPECT_EQ(table.rows[1].sequences, 1u);
  EXPECT_EQ(table.rows[1].rate, 0.0);
}

TEST(Canonicity, ParsesTextFormatsAndSkipsBadLines) {
  const auto& t = toy();
  std::istringstream in(
      "# comment\n"
      "[3, 5]\n"
      "\n"
      "3 3\n"
      "0,1\n"
      "[99]\n"
      "not numbers\n");
  const auto table = canonicity_rate(in, t.vocab, t.merges);
  EXPECT_EQ(table.sequences, 3u);
  EXPECT_EQ(table.skipped, 2u);
  EXPECT_EQ(table.warnings.size(), 2u);
  ASSERT_EQ(table.rows.size(), 2u);
  EXPECT_EQ(table.rows[0].rate, 1.0);
  // [ab, bc] and [ab, ab] are canonical, [a, b] is not.
  EXPECT_NEAR(table.rows[1].rate, 2.0 / 3.0, 1e-15);
}

TEST(Canonicity, StripsBosAndEos) {
  const auto& t = testing::llama2();
  const auto ids =
      canonical_encode(pretokenize("Tokens", Pretokenizer::Metaspace), t.vocab,
                       t.merges)
          .ids;
  TokenIds framed{*t.vocab.bos()};
  framed.insert(framed.end(), ids.begin(), ids.end());
  framed.push_back(*t.vocab.eos());
  const auto table =
      canonicity_rate(std::vector<TokenIds>{framed}, t.vocab, t.merges);
  ASSERT_EQ(table.rows.size(), ids.size());
  EXPECT_EQ(table.rows.back().rate, 1.0);
}

}  // namespace
}  // namespace tokspace
