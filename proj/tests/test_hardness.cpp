#include <cmath>
#include <random>
#include <set>
#include <sstream>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "support.hpp"
#include "tokspace/error.hpp"
#include "tokspace/exact.hpp"
#include "tokspace/hardness.hpp"
#include "tokspace/logspace.hpp"
#include "tokspace/mdd.hpp"

namespace tokspace {
namespace {

CnfFormula parse(const std::string& text) {
  std::istringstream in(text);
  return parse_dimacs(in);
}

double path_probability(const ReductionInstance& inst, const TokenIds& ids) {
  return std::exp(score_sequence(*inst.model, ids).total_logprob);
}

TEST(Dimacs, ParsesCommentsAndClauses) {
  const auto cnf = parse("c hello\np cnf 3 2\n1 -2 0\n2 3\n0\n");
  EXPECT_EQ(cnf.n_vars, 3);
  ASSERT_EQ(cnf.clauses.size(), 2u);
  EXPECT_EQ(cnf.clauses[0], (std::vector<Literal>{{1, true}, {2, false}}));
  EXPECT_EQ(cnf.clauses[1], (std::vector<Literal>{{2, true}, {3, true}}));
  EXPECT_EQ(parse_dimacs_file(testing::fixture("sat1.cnf")).clauses.size(), 2u);
}

TEST(Dimacs, RejectsMalformedInput) {
  EXPECT_THROW(parse("p cnf 2 1\n1 5 0\n"), Error);
  EXPECT_THROW(parse("p cnf 2 1\n1 2 -1 2 0\n"), Error);
  EXPECT_THROW(parse("1 2 0\n"), Error);
  EXPECT_THROW(parse("p cnf 2 1\n1 x 0\n"), Error);
}

TEST(Dimacs, JsonRoundTrip) {
  const auto cnf = parse("p cnf 3 2\n1 -2 0\n2 3 0\n");
  const auto back = cnf_from_json(cnf_to_json(cnf));
  EXPECT_EQ(back.n_vars, 3);
  EXPECT_EQ(back.clauses, cnf.clauses);
}

TEST(BruteForce, SmallExamples) {
  EXPECT_EQ(brute_force_count(parse("p cnf 1 1\n1 0\n")), 1u);
  EXPECT_EQ(brute_force_count(CnfFormula{5, {}}), 32u);
  EXPECT_EQ(brute_force_count(parse("p cnf 2 2\n1 2 0\n-1 -2 0\n")), 2u);
  EXPECT_EQ(brute_force_count(parse_dimacs_file(testing::fixture("sat1.cnf"))),
            4u);
  EXPECT_EQ(
      brute_force_count(parse_dimacs_file(testing::fixture("unsat1.cnf"))), 0u);
  try {
    brute_force_count(CnfFormula{25, {}});
    FAIL() << "expected TooManyVariables";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), Error::Kind::TooManyVariables);
  }
}

TEST(BruteForce, MatchesIndependentCounter) {
  std::mt19937_64 rng(4);
  for (int i = 0; i < 300; ++i) {
    const auto cnf = testing::random_cnf(rng, 1 + i % 6, i % 7);
    ASSERT_EQ(brute_force_count(cnf), testing::count_models(cnf));
  }
}

TEST(TheoremOne, SatisfiableSingleClauseByHand) {
  // (a1): [a, bc, d] = 0.45 * 0.9 * 0.9, [ab, c, d] = 0.45 * 0.9 * 0.1.
  const auto inst = build_theorem1(parse("p cnf 1 1\n1 0\n"));
  EXPECT_EQ(inst.text, "abcd");
  using namespace reduction_token;
  EXPECT_NEAR(path_probability(inst, {a, bc, d}), 0.3645, 1e-15);
  EXPECT_NEAR(path_probability(inst, {ab, c, d}), 0.0405, 1e-15);
  EXPECT_NEAR(std::exp(inst.threshold()), 0.5 * 0.45 * 0.81, 1e-15);
  const Mdd mdd = compile_mdd(inst.text, inst.tables.vocab);
  EXPECT_EQ(count_tokenizations(mdd), 2);
  EXPECT_GT(exact_most_likely(*inst.model, mdd).logprob, inst.threshold());
}

TEST(TheoremOne, UnsatisfiableByHand) {
  // (a1) and (not a1): either path pays 0.9 * 0.1 on the two d's.
  const auto inst = build_theorem1(parse("p cnf 1 2\n1 0\n-1 0\n"));
  using namespace reduction_token;
  EXPECT_NEAR(path_probability(inst, {a, bc, d, d}), 0.45 * 0.9 * 0.09, 1e-15);
  EXPECT_NEAR(path_probability(inst, {ab, c, d, d}), 0.45 * 0.9 * 0.09, 1e-15);
  const Mdd mdd = compile_mdd(inst.text, inst.tables.vocab);
  EXPECT_LE(exact_most_likely(*inst.model, mdd).logprob, inst.threshold());
}

TEST(TheoremOne, SatisfyingAssignmentsScoreExactly) {
  std::mt19937_64 rng(9);
  for (int i = 0; i < 200; ++i) {
    const int n = 1 + i % 5, k = 1 + i % 6;
    const auto cnf = testing::random_cnf(rng, n, k);
    const auto inst = build_theorem1(cnf);
    const LogProb sat = n * std::log(0.45) + (n + k) * std::log(0.9);
    for (std::uint64_t x = 0; x < (1u << n); ++x) {
      const auto ids = inst.tokenization_of(x);
      ASSERT_EQ(inst.assignment_of(ids), x);
      const auto lp = score_sequence(*inst.model, ids).total_logprob;
      if (cnf.satisfied_by(x)) {
        ASSERT_NEAR(lp, sat, 1e-12);
      } else {
        ASSERT_LE(lp, inst.threshold());
      }
    }
  }
}

TEST(TheoremTwo, SingleClauseByHand) {
  // eps = 0.5^3: [a, bc, d] = 0.405 (1 - eps), [ab, c, d] = 0.405 eps.
  const auto inst = build_theorem2(parse("p cnf 1 1\n1 0\n"));
  using namespace reduction_token;
  const double eps = 0.125;
  EXPECT_NEAR(path_probability(inst, {a, bc, d}), 0.405 * (1 - eps), 1e-15);
  EXPECT_NEAR(path_probability(inst, {ab, c, d}), 0.405 * eps, 1e-15);
  const Mdd mdd = compile_mdd(inst.text, inst.tables.vocab);
  const LogProb m = exact_marginal(*inst.model, mdd);
  for (std::uint64_t c = 0; c <= 2; ++c) {
    const auto [lo, hi] = inst.window(c);
    EXPECT_EQ(lo < m && m < hi, c == 1) << c;
  }
  EXPECT_EQ(recover_count(inst, m), 1u);
}

TEST(TheoremTwo, UnsatisfiableFallsBelowFirstWindow) {
  const auto inst = build_theorem2(parse("p cnf 2 3\n1 0\n-1 2 0\n-2 0\n"));
  const Mdd mdd = compile_mdd(inst.text, inst.tables.vocab);
  const LogProb m = exact_marginal(*inst.model, mdd);
  EXPECT_LT(m, std::log(0.5) + inst.log_base());
  EXPECT_EQ(recover_count(inst, m), 0u);
}

TEST(TheoremTwo, RecoversCountFive) {
  // (a1 or a2 or a3) leaves 7 assignments; (not a1 or not a2) removes
  // [1,1,0] and [1,1,1].
  const auto cnf = parse("p cnf 3 2\n1 2 3 0\n-1 -2 0\n");
  ASSERT_EQ(testing::count_models(cnf), 5u);
  const auto inst = build_theorem2(cnf);
  const Mdd mdd = compile_mdd(inst.text, inst.tables.vocab);
  EXPECT_EQ(recover_count(inst, exact_marginal(*inst.model, mdd)), 5u);
}

TEST(TheoremTwo, PlugInValues) {
  const auto cnf = parse("p cnf 3 2\n1 2 0\n3 0\n");
  const auto inst = build_theorem2(cnf);
  const int n = 3, k = 2;
  const double eps = std::pow(0.5, n + k + 1);
  for (std::uint64_t c = 0; c <= 8; ++c) {
    const LogProb m = inst.log_base() + k * std::log1p(-eps) +
                      (c == 0 ? -50.0 : std::log(double(c)));
    EXPECT_EQ(recover_count(inst, m), c);
  }
  try {
    recover_count(inst, inst.log_base() + std::log(1.5));
    FAIL() << "expected NoWindow";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), Error::Kind::NoWindow);
  }
  EXPECT_THROW(recover_count(inst, inst.log_base() + std::log(20.0)), Error);
}

// Every prefix of every path, for every formula with n <= 3 and K <= 2.
TEST(Reduction, ConditionalsNormalizeOnReachablePrefixes) {
  for (int n = 1; n <= 3; ++n) {
    for (const auto& cnf : testing::all_cnfs(n, 2)) {
      for (Theorem th : {Theorem::MostLikely, Theorem::Marginal}) {
        const auto inst = build_reduction(th, cnf);
        const Mdd mdd = compile_mdd(inst.text, inst.tables.vocab);
        for (const auto& p : enumerate_paths(mdd)) {
          for (std::size_t j = 0; j <= p.size(); ++j) {
            const auto lps = inst.model->full_logprobs(
                std::span<const TokenId>(p.data(), j));
            ASSERT_NEAR(std::exp(log_sum_exp(lps)), 1.0, 1e-12);
          }
        }
      }
    }
  }
}

TEST(Reduction, UniformLengthAndBijection) {
  std::mt19937_64 rng(13);
  for (int i = 0; i < 100; ++i) {
    const int n = 1 + i % 5, k = i % 5;
    const auto inst = build_theorem1(testing::random_cnf(rng, n, k));
    ASSERT_EQ(inst.text.size(), std::size_t(3 * n + k));
    const Mdd mdd = compile_mdd(inst.text, inst.tables.vocab);
    const auto paths = enumerate_paths(mdd);
    ASSERT_EQ(paths.size(), std::size_t(1) << n);
    std::set<std::uint64_t> seen;
    for (const auto& p : paths) {
      ASSERT_EQ(p.size(), std::size_t(2 * n + k));
      const auto x = inst.assignment_of(p);
      ASSERT_EQ(inst.tokenization_of(x), p);
      seen.insert(x);
    }
    ASSERT_EQ(seen.size(), paths.size());
  }
}

}  // namespace
}  // namespace tokspace
