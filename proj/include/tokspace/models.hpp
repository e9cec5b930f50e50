#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>

#include <nlohmann/json_fwd.hpp>

#include "tokspace/model.hpp"

namespace tokspace {

class UniformModel final : public ScoringModel {
 public:
  explicit UniformModel(std::size_t vocab_size);

  std::size_t vocab_size() const override { return size_; }
  std::vector<LogProb> next_logprobs(
      std::span<const TokenId> prefix,
      std::span<const TokenId> candidates) const override;
  std::optional<int> markov_order() const override { return 1; }
  std::string describe() const override;

 private:
  std::size_t size_;
};

// n-gram model of order 1..3. The conditional looks at the last order-1
// tokens of the prefix (fewer near the start). Distributions come either from
// an explicit table or from add-k smoothed corpus counts; contexts missing
// from a table are uniform.
class NgramModel final : public ScoringModel {
 public:
  using Context = std::vector<TokenId>;

  NgramModel(int order, std::size_t vocab_size,
             std::map<Context, std::vector<LogProb>> table);

  static NgramModel from_corpus(int order, std::size_t vocab_size,
                                std::span<const TokenIds> corpus,
                                double add_k = 0.1);

  // {"order", "vocab_size", "table": [{"context": [...], "probs": [...]}]}
  // or {"order", "vocab_size", "corpus": [[...], ...], "add_k"}.
  static NgramModel from_json(const nlohmann::json& doc);

  std::size_t vocab_size() const override { return size_; }
  std::vector<LogProb> next_logprobs(
      std::span<const TokenId> prefix,
      std::span<const TokenId> candidates) const override;
  std::vector<LogProb> full_logprobs(
      std::span<const TokenId> prefix) const override;
  std::optional<int> markov_order() const override { return order_; }
  std::string describe() const override;

 private:
  const std::vector<LogProb>* lookup(std::span<const TokenId> prefix) const;

  int order_;
  std::size_t size_;
  std::map<Context, std::vector<LogProb>> table_;
  LogProb uniform_;
};

// Pseudo-random conditionals: logits are Gaussian draws keyed by
// (seed, last `history` tokens, candidate). With no history limit every
// distinct prefix gets its own distribution, which gives search and sampling
// code an adversarial model with unbounded context. `scale` is the logit
// standard deviation.
class RandomTableModel final : public ScoringModel {
 public:
  RandomTableModel(std::size_t vocab_size, std::uint64_t seed, double scale,
                   std::optional<int> history = std::nullopt);

  std::size_t vocab_size() const override { return size_; }
  std::vector<LogProb> next_logprobs(
      std::span<const TokenId> prefix,
      std::span<const TokenId> candidates) const override;
  std::vector<LogProb> full_logprobs(
      std::span<const TokenId> prefix) const override;
  std::optional<int> markov_order() const override;
  std::string describe() const override;

 private:
  std::size_t size_;
  std::uint64_t seed_;
  double scale_;
  std::optional<int> history_;
};

}  // namespace tokspace
