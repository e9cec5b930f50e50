#include "tokspace/model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "tokspace/logspace.hpp"

namespace tokspace {

std::vector<LogProb> ScoringModel::full_logprobs(
    std::span<const TokenId> prefix) const {
  TokenIds all(vocab_size());
  std::iota(all.begin(), all.end(), 0);
  return next_logprobs(prefix, all);
}

std::vector<std::vector<LogProb>> ScoringModel::next_logprobs_batch(
    std::span<const LogprobQuery> queries) const {
  std::vector<std::vector<LogProb>> out;
  out.reserve(queries.size());
  for (const auto& q : queries) {
    out.push_back(q.candidates ? next_logprobs(q.prefix, *q.candidates)
                               : full_logprobs(q.prefix));
  }
  return out;
}

SequenceScore score_continuation(const ScoringModel& model,
                                 std::span<const TokenId> context_ids,
                                 std::span<const TokenId> ids,
                                 std::optional<TokenId> eos) {
  SequenceScore score;
  TokenIds prefix(context_ids.begin(), context_ids.end());
  prefix.reserve(context_ids.size() + ids.size());
  for (TokenId id : ids) {
    const LogProb lp = model.next_logprobs(prefix, std::span(&id, 1)).front();
    score.per_step.push_back(lp);
    score.total_logprob += lp;
    prefix.push_back(id);
  }
  if (eos) {
    const LogProb lp = eos_logprob(model, prefix, eos);
    score.per_step.push_back(lp);
    score.total_logprob += lp;
  }
  return score;
}

SequenceScore score_sequence(const ScoringModel& model,
                             std::span<const TokenId> ids,
                             const ScoringContext& context) {
  return score_continuation(model, context.prefix, ids, context.eos);
}

LogProb eos_logprob(const ScoringModel& model, std::span<const TokenId> prefix,
                    std::optional<TokenId> eos) {
  if (!eos) return 0.0;
  const TokenId id = *eos;
  return model.next_logprobs(prefix, std::span(&id, 1)).front();
}

std::vector<LogProb> log_softmax(std::span<const double> logits) {
  const double max = *std::max_element(logits.begin(), logits.end());
  LogSumExp acc;
  for (double l : logits) acc.add(l - max);
  const double norm = max + acc.value();
  std::vector<LogProb> out(logits.size());
  std::transform(logits.begin(), logits.end(), out.begin(),
                 [norm](double l) { return l - norm; });
  return out;
}

}  // namespace tokspace
