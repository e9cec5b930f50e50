#include <filesystem>
#include <fstream>
#include <cmath>
#include <map>
#include <random>

#include <unistd.h>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "support.hpp"
#include "tokspace/bpe.hpp"
#include "tokspace/error.hpp"
#include "tokspace/vocab.hpp"

namespace tokspace {
namespace {

using testing::ids_of;
using testing::strings_of;
using Strings = std::vector<std::string>;

BpeTables abc_tables() {
  Vocabulary vocab({"a", "b", "c", "ab", "abc"});
  MergeTable merges(vocab, {{0, 1, 3}, {3, 2, 4}});
  return {std::move(vocab), std::move(merges)};
}

TEST(Vocabulary, LooksUpBothWays) {
  const auto t = abc_tables();
  EXPECT_EQ(t.vocab.size(), 5u);
  EXPECT_EQ(*t.vocab.find("ab"), 3);
  EXPECT_FALSE(t.vocab.find("bc"));
  EXPECT_EQ(t.vocab.token(4), "abc");
  try {
    t.vocab.token(9);
    FAIL() << "expected UnknownTokenId";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), Error::Kind::UnknownTokenId);
  }
}

TEST(Vocabulary, RejectsDuplicates) {
  EXPECT_THROW(Vocabulary({"a", "a"}), Error);
}

TEST(Vocabulary, SpecialAndByteTokens) {
  Vocabulary vocab({"<s>", "</s>", "<0x41>", "a"});
  EXPECT_EQ(vocab.bos(), 0);
  EXPECT_EQ(vocab.eos(), 1);
  EXPECT_TRUE(vocab.is_special(2));
  EXPECT_EQ(vocab.byte_value(2), 0x41);
  EXPECT_FALSE(vocab.byte_fallback());  // not all 256 bytes present
}

TEST(MergeTable, RejectsNonConcatenatingRule) {
  Vocabulary vocab({"a", "b", "ba"});
  EXPECT_THROW(MergeTable(vocab, {{0, 1, 2}}), Error);
}

TEST(CanonicalEncode, HandSimulatedMerges) {
  const auto t = abc_tables();
  EXPECT_EQ(strings_of(canonical_encode("abc", t.vocab, t.merges).ids, t.vocab),
            (Strings{"abc"}));
  EXPECT_EQ(strings_of(canonical_encode("abab", t.vocab, t.merges).ids, t.vocab),
            (Strings{"ab", "ab"}));
  EXPECT_EQ(strings_of(canonical_encode("cab", t.vocab, t.merges).ids, t.vocab),
            (Strings{"c", "ab"}));
  EXPECT_TRUE(canonical_encode("abc", t.vocab, t.merges).is_canonical);
}

TEST(CanonicalEncode, SingleAtomicToken) {
  Vocabulary vocab({"a"});
  MergeTable merges(vocab, {});
  EXPECT_EQ(canonical_encode("a", vocab, merges).ids, (TokenIds{0}));
}

TEST(CanonicalEncode, LeftmostOccurrenceWinsTies) {
  // "aaa" with a+a -> aa: the leftmost pair merges first, giving [aa, a].
  Vocabulary vocab({"a", "aa"});
  MergeTable merges(vocab, {{0, 0, 1}});
  EXPECT_EQ(canonical_encode("aaa", vocab, merges).ids, (TokenIds{1, 0}));
}

TEST(CanonicalEncode, UnspellableCharacterReportsPosition) {
  Vocabulary vocab({"a", "b"});
  MergeTable merges(vocab, {});
  try {
    canonical_encode("abxa", vocab, merges);
    FAIL() << "expected UnspellableCharacter";
  } catch (const UnspellableCharacter& e) {
    EXPECT_EQ(e.position(), 2u);
    EXPECT_EQ(e.kind(), Error::Kind::UnspellableCharacter);
  }
}

TEST(CanonicalEncode, MatchesTextbookBpeOnRandomInstances) {
  std::mt19937_64 rng(11);
  for (int i = 0; i < 1000; ++i) {
    const auto inst = testing::random_instance(rng, 30, 16);
    const auto& v = inst.tables.vocab;
    const auto got = canonical_encode(inst.text, v, inst.tables.merges);
    ASSERT_EQ(strings_of(got.ids, v),
              testing::reference_bpe(inst.text, inst.merge_strings))
        << inst.text;
    ASSERT_EQ(decode(got.ids, v), inst.text);
    ASSERT_TRUE(is_canonical(got.ids, v, inst.tables.merges));
  }
}

TEST(Llama2, TokensEncodesAsTokEns) {
  const auto& t = testing::llama2();
  const auto raw = pretokenize("Tokens", Pretokenizer::Metaspace);
  EXPECT_EQ(raw, "\xE2\x96\x81Tokens");
  const auto enc = canonical_encode(raw, t.vocab, t.merges);
  EXPECT_EQ(strings_of(enc.ids, t.vocab),
            (Strings{"\xE2\x96\x81Tok", "ens"}));
  EXPECT_EQ(to_surface(decode(enc.ids, t.vocab), Pretokenizer::Metaspace),
            " Tokens");
}

TEST(Llama2, CanonicityOfTokensSplits) {
  const auto& t = testing::llama2();
  const auto canonical = ids_of({"\xE2\x96\x81Tok", "ens"}, t.vocab);
  const auto split = ids_of({"\xE2\x96\x81Tok", "en", "s"}, t.vocab);
  EXPECT_TRUE(is_canonical(canonical, t.vocab, t.merges));
  EXPECT_FALSE(is_canonical(split, t.vocab, t.merges));
  EXPECT_EQ(decode(split, t.vocab), decode(canonical, t.vocab));
}

TEST(Llama2, ByteFallbackForUnknownCharacters) {
  const auto& t = testing::llama2();
  ASSERT_TRUE(t.vocab.byte_fallback());
  const std::string parrot = "\xF0\x9F\xA6\x9C";  // U+1F99C
  ASSERT_FALSE(t.vocab.find(parrot));
  const auto enc = canonical_encode("a" + parrot, t.vocab, t.merges);
  EXPECT_EQ(enc.ids.size(), 5u);
  EXPECT_EQ(decode(enc.ids, t.vocab), "a" + parrot);
}

TEST(Decode, EmptyAndConcatenation) {
  const auto t = abc_tables();
  EXPECT_EQ(decode(TokenIds{}, t.vocab), "");
  EXPECT_EQ(decode(TokenIds{0, 1, 2}, t.vocab), "abc");
  EXPECT_THROW(decode(TokenIds{7}, t.vocab), Error);
}

TEST(DropoutEncode, ZeroIsCanonicalOnRandomStrings) {
  std::mt19937_64 rng(5);
  for (int i = 0; i < 1000; ++i) {
    const auto inst = testing::random_instance(rng, 30, 16);
    const auto& tb = inst.tables;
    const auto d = dropout_encode(inst.text, tb.vocab, tb.merges, 0.0, i);
    ASSERT_EQ(d, canonical_encode(inst.text, tb.vocab, tb.merges));
  }
}

TEST(DropoutEncode, OneIsAtomicSplit) {
  const auto t = abc_tables();
  const auto d = dropout_encode("abc", t.vocab, t.merges, 1.0, 3);
  EXPECT_EQ(strings_of(d.ids, t.vocab), (Strings{"a", "b", "c"}));
  EXPECT_FALSE(d.is_canonical);
}

TEST(DropoutEncode, RejectsBadProbability) {
  const auto t = abc_tables();
  EXPECT_THROW(dropout_encode("abc", t.vocab, t.merges, 1.5, 0), Error);
  EXPECT_THROW(dropout_encode("abc", t.vocab, t.merges, -0.1, 0), Error);
}

// Frequencies over many seeds against the exact decision-tree distribution,
// each outcome within 4 standard deviations.
void expect_matches_oracle(const testing::RandomInstance& inst, double p,
                           int seeds) {
  const auto& tb = inst.tables;
  const auto oracle =
      testing::dropout_distribution(inst.text, inst.merge_strings, p);
  std::map<Strings, int> counts;
  for (int s = 0; s < seeds; ++s) {
    const auto d = dropout_encode(inst.text, tb.vocab, tb.merges, p, s);
    ASSERT_EQ(decode(d.ids, tb.vocab), inst.text);
    ++counts[strings_of(d.ids, tb.vocab)];
  }
  for (const auto& [tokens, count] : counts) {
    ASSERT_TRUE(oracle.count(tokens)) << "outcome outside oracle support";
  }
  for (const auto& [tokens, prob] : oracle) {
    const double expected = prob * seeds;
    const double sd = std::sqrt(seeds * prob * (1.0 - prob));
    EXPECT_NEAR(counts[tokens], expected, 4.0 * sd + 1e-9);
  }
}

TEST(DropoutEncode, HalfDropMatchesDecisionTree) {
  testing::RandomInstance inst;
  inst.tables = abc_tables();
  inst.merge_strings = {{"a", "b"}, {"ab", "c"}};
  inst.text = "abc";
  const auto oracle = testing::dropout_distribution("abc", inst.merge_strings, 0.5);
  EXPECT_DOUBLE_EQ(oracle.at(Strings{"a", "b", "c"}), 0.5);
  EXPECT_DOUBLE_EQ(oracle.at(Strings{"ab", "c"}), 0.25);
  EXPECT_DOUBLE_EQ(oracle.at(Strings{"abc"}), 0.25);
  expect_matches_oracle(inst, 0.5, 10000);
}

TEST(DropoutEncode, MatchesDecisionTreeOnRandomInstances) {
  std::mt19937_64 rng(21);
  for (int i = 0; i < 5; ++i) {
    const auto inst = testing::random_instance(rng, 12, 6);
    expect_matches_oracle(inst, 0.3, 4000);
  }
}

TEST(Pretokenize, Metaspace) {
  EXPECT_EQ(pretokenize("a b", Pretokenizer::Metaspace),
            "\xE2\x96\x81" "a" "\xE2\x96\x81" "b");
  EXPECT_EQ(pretokenize(" Bird", Pretokenizer::Metaspace),
            "\xE2\x96\x81" "Bird");
  EXPECT_EQ(pretokenize(" Bird", Pretokenizer::WholeString), " Bird");
  EXPECT_EQ(to_surface("\xE2\x96\x81" "a" "\xE2\x96\x81" "b",
                       Pretokenizer::Metaspace),
            " a b");
}

class LoadTables : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = std::filesystem::temp_directory_path() /
           ("tokspace_load_" + std::to_string(::getpid()));
    std::filesystem::create_directories(dir_);
  }
  void TearDown() override { std::filesystem::remove_all(dir_); }
  std::filesystem::path dir_;
};

TEST_F(LoadTables, TwoFileForm) {
  std::ofstream(dir_ / "vocab.txt") << "a\nb\nc\nab\nabc\n";
  std::ofstream(dir_ / "merges.txt") << "#version: 0.2\na b\nab c\n";
  for (const auto& path : {dir_, dir_ / "vocab.txt"}) {
    const auto t = load_tables(path);
    EXPECT_EQ(t.vocab.size(), 5u);
    EXPECT_EQ(t.merges.size(), 2u);
    EXPECT_EQ(canonical_encode("abc", t.vocab, t.merges).ids, (TokenIds{4}));
  }
}

TEST_F(LoadTables, JsonRoundTrip) {
  const auto t = abc_tables();
  const auto doc = tables_to_json(t);
  const auto back = parse_tables_json(doc);
  EXPECT_EQ(back.vocab.tokens(), t.vocab.tokens());
  EXPECT_EQ(back.merges.size(), t.merges.size());
  // Nested "model" layout and pair-form merges.
  nlohmann::json nested = {
      {"model",
       {{"vocab", doc["vocab"]},
        {"merges", nlohmann::json::array({nlohmann::json::array({"a", "b"}),
                                        nlohmann::json::array({"ab", "c"})})}}}};
  const auto n = parse_tables_json(nested);
  EXPECT_EQ(canonical_encode("abc", n.vocab, n.merges).ids, (TokenIds{4}));
}

TEST_F(LoadTables, MalformedJsonIsFormatError) {
  std::ofstream(dir_ / "bad.json") << "{\"vocab\": {\"a\": 0}, \"merges\": [\"a z\"]}";
  try {
    load_tables(dir_ / "bad.json");
    FAIL() << "expected an error";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), Error::Kind::Format);
  }
}

}  // namespace
}  // namespace tokspace
