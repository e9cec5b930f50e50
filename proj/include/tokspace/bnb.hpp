#pragma once

#include <chrono>
#include <cstdint>
#include <vector>

#include "tokspace/bpe.hpp"
#include "tokspace/mdd.hpp"
#include "tokspace/model.hpp"

namespace tokspace {

struct IncumbentUpdate {
  std::uint64_t nodes_expanded;
  LogProb logprob;
};

struct SearchReport {
  Tokenization best;
  LogProb best_logprob = kLogZero;
  LogProb canonical_logprob = kLogZero;
  std::uint64_t nodes_expanded = 0;
  std::uint64_t pruned = 0;
  bool timed_out = false;
  std::chrono::duration<double> elapsed{0};
  bool improved_over_canonical = false;
  // Serial runs record one entry per incumbent improvement.
  std::vector<IncumbentUpdate> trace;
  // Filled only when SearchOptions::record_pruned is set.
  std::vector<TokenIds> pruned_prefixes;
};

struct SearchOptions {
  std::chrono::duration<double> budget = std::chrono::hours(1);
  ScoringContext context;
  // Subtrees searched concurrently against a shared incumbent. The final
  // value matches the serial run; the trace and tie winner may not.
  bool parallel = false;
  bool record_pruned = false;
};

// Depth-first branch and bound seeded with the canonical tokenization as the
// incumbent. Children are tried in decreasing conditional probability; a
// partial path whose log-probability is <= the incumbent is pruned, since
// every further factor is at most 1. Anytime: when the budget runs out the
// best path so far is returned with timed_out set.
// Throws Error(CanonicalMismatch) when canonical is not a path of mdd.
SearchReport branch_and_bound(const ScoringModel& model, const Mdd& mdd,
                              const Tokenization& canonical,
                              const SearchOptions& options = {});

}  // namespace tokspace
