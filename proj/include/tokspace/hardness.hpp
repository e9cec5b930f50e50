#pragma once

#include <array>
#include <cstdint>
#include <istream>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "tokspace/model.hpp"
#include "tokspace/vocab.hpp"

namespace tokspace {

struct Literal {
  int var;  // 1-based
  bool positive;

  friend bool operator==(const Literal&, const Literal&) = default;
};

// Conjunction of clauses, each a disjunction of 1..3 literals.
struct CnfFormula {
  int n_vars = 0;
  std::vector<std::vector<Literal>> clauses;

  // Throws Error(Format) when an invariant is broken.
  void validate() const;
  bool satisfied_by(std::uint64_t assignment) const;  // bit i-1 = a_i
};

CnfFormula parse_dimacs(std::istream& in);
CnfFormula parse_dimacs_file(const std::string& path);

// {"n_vars": n, "clauses": [[1, -2], ...]} (DIMACS signed literals).
nlohmann::json cnf_to_json(const CnfFormula& cnf);
CnfFormula cnf_from_json(const nlohmann::json& doc);

// Truth-table model count; throws Error(TooManyVariables) above 24.
std::uint64_t brute_force_count(const CnfFormula& cnf);

enum class Theorem { MostLikely = 1, Marginal = 2 };

// Token ids of the reduction vocabulary {a, bc, ab, c, d}.
namespace reduction_token {
inline constexpr TokenId a = 0;
inline constexpr TokenId bc = 1;
inline constexpr TokenId ab = 2;
inline constexpr TokenId c = 3;
inline constexpr TokenId d = 4;
}  // namespace reduction_token

// Rule-table conditional of the 3-SAT reductions. Position i of the next
// token is the prefix length (0-based). Variable a_j is read from the token
// at position 2(j-1); clause k is checked when emitting position 2n+k-1.
// Clause indices beyond K count as satisfied.
class ReductionModel final : public ScoringModel {
 public:
  ReductionModel(Theorem theorem, CnfFormula cnf);

  std::size_t vocab_size() const override { return 5; }
  std::vector<LogProb> next_logprobs(
      std::span<const TokenId> prefix,
      std::span<const TokenId> candidates) const override;
  std::vector<LogProb> full_logprobs(
      std::span<const TokenId> prefix) const override;
  std::string describe() const override;

  Theorem theorem() const { return theorem_; }
  const CnfFormula& cnf() const { return cnf_; }

  bool clause_satisfied(std::size_t k, std::span<const TokenId> prefix) const;

 private:
  Theorem theorem_;
  CnfFormula cnf_;
  // log values of the four clause-dependent cases:
  // [d & S, other & S, d & !S, other & !S]
  std::array<LogProb, 4> clause_case_;
};

struct ReductionInstance {
  Theorem theorem;
  CnfFormula cnf;
  std::string text;  // "abc" * n + "d" * K
  BpeTables tables;  // vocabulary {a, bc, ab, c, d}, no merges
  std::shared_ptr<const ReductionModel> model;

  int n() const { return cnf.n_vars; }
  int k() const { return static_cast<int>(cnf.clauses.size()); }

  // log(0.45^n * 0.9^n), the shared factor of every tokenization.
  LogProb log_base() const;
  // Theorem 1: log(0.5 * 0.45^n * 0.9^(n+K)).
  LogProb threshold() const;
  // Theorem 2: log of the open window ((C-0.5) B, (C+0.5) B).
  std::pair<LogProb, LogProb> window(std::uint64_t count) const;

  TokenIds tokenization_of(std::uint64_t assignment) const;
  std::uint64_t assignment_of(std::span<const TokenId> ids) const;
};

ReductionInstance build_theorem1(const CnfFormula& cnf);
ReductionInstance build_theorem2(const CnfFormula& cnf);
ReductionInstance build_reduction(Theorem theorem, const CnfFormula& cnf);

// Binary search for the unique C in {0..2^n} whose window holds the
// marginal. Throws Error(NoWindow) when it falls between windows.
std::uint64_t recover_count(const ReductionInstance& instance,
                            LogProb log_marginal);

}  // namespace tokspace
