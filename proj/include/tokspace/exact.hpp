#pragma once

#include <cstdint>

#include "tokspace/bpe.hpp"
#include "tokspace/mdd.hpp"
#include "tokspace/model.hpp"

namespace tokspace {

struct ExactOptions {
  std::uint64_t path_cap = 1'000'000;
  ScoringContext context;
};

struct ScoredTokenization {
  Tokenization tokenization;
  LogProb logprob = kLogZero;
};

// log sum_v p(v, x) over every path of the diagram. Paths are scored in
// lexicographic order with shared-prefix model queries; the parallel version
// splits the path tree into ordered subtrees and merges their accumulators
// by subtree index. Throws Error(TooManyPaths) above options.path_cap.
LogProb exact_marginal(const ScoringModel& model, const Mdd& mdd,
                       const ExactOptions& options = {});
LogProb exact_marginal_serial(const ScoringModel& model, const Mdd& mdd,
                              const ExactOptions& options = {});

// argmax_v p(v, x); ties go to the lexicographically smallest id sequence.
ScoredTokenization exact_most_likely(const ScoringModel& model, const Mdd& mdd,
                                     const ExactOptions& options = {});
ScoredTokenization exact_most_likely_serial(const ScoringModel& model,
                                            const Mdd& mdd,
                                            const ExactOptions& options = {});

// Dynamic program over (node, previous token) for models of order <= 2.
// Throws Error(ModelNotMarkov) otherwise.
ScoredTokenization viterbi_bigram(const ScoringModel& model, const Mdd& mdd,
                                  const ScoringContext& context = {});

}  // namespace tokspace
