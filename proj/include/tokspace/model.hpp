#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "tokspace/types.hpp"

namespace tokspace {

struct LogprobQuery {
  TokenIds prefix;
  // nullopt = the whole vocabulary in id order.
  std::optional<TokenIds> candidates;
};

// Autoregressive conditional p(v_i | v_1..v_{i-1}) over a fixed vocabulary.
// Values are natural-log probabilities under the full-vocabulary
// distribution; candidate restriction selects, it never renormalizes.
// Implementations are immutable after construction and safe to share.
class ScoringModel {
 public:
  virtual ~ScoringModel() = default;

  virtual std::size_t vocab_size() const = 0;

  virtual std::vector<LogProb> next_logprobs(
      std::span<const TokenId> prefix,
      std::span<const TokenId> candidates) const = 0;

  virtual std::vector<LogProb> full_logprobs(
      std::span<const TokenId> prefix) const;

  // One round trip for many prefixes; the default loops.
  virtual std::vector<std::vector<LogProb>> next_logprobs_batch(
      std::span<const LogprobQuery> queries) const;

  // n-gram order when the conditional looks at no more than order-1
  // previous tokens; nullopt when history is unbounded or undeclared.
  virtual std::optional<int> markov_order() const { return std::nullopt; }

  virtual std::string describe() const = 0;
};

struct SequenceScore {
  LogProb total_logprob = 0.0;
  std::vector<LogProb> per_step;
};

// What precedes and follows the scored tokens. `prefix` holds the BOS
// sentinel (when used) and any conditioning context; `eos`, when set, adds
// log p(eos | everything) as a final step.
struct ScoringContext {
  TokenIds prefix;
  std::optional<TokenId> eos;
};

SequenceScore score_continuation(const ScoringModel& model,
                                 std::span<const TokenId> context_ids,
                                 std::span<const TokenId> ids,
                                 std::optional<TokenId> eos = std::nullopt);

SequenceScore score_sequence(const ScoringModel& model,
                             std::span<const TokenId> ids,
                             const ScoringContext& context = {});

// log p(eos | prefix), or 0 when eos is unset.
LogProb eos_logprob(const ScoringModel& model, std::span<const TokenId> prefix,
                    std::optional<TokenId> eos);

// Log-softmax with max shift; the result exponentiates to 1 within rounding.
std::vector<LogProb> log_softmax(std::span<const double> logits);

}  // namespace tokspace
