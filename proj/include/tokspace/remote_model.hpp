#pragma once

#include <chrono>
#include <string>

#include "tokspace/model.hpp"
#include "tokspace/vocab.hpp"

namespace tokspace {

// Client of the logits bridge:
//   POST /v1/logprobs  {"prefix_ids": [...], "candidate_ids": [...] | null}
//                      -> {"logprobs": [...]}
//   POST /v1/logprobs  {"batch": [<request>, ...]} -> {"batch": [[...], ...]}
//   GET  /v1/vocab     -> vocabulary (and merges) JSON
//   POST /v1/canonical {"text": "..."} -> {"ids": [...]}
//   GET  /v1/health    -> {"status": "ok"}
// Every call opens its own connection, so concurrent calls never share
// state. Failures surface as Error(Transport) or Error(Format).
class RemoteModel final : public ScoringModel {
 public:
  // base_url is "http://host:port" with an optional path prefix. The
  // vocabulary size is fetched from /v1/vocab unless given.
  explicit RemoteModel(std::string base_url, std::size_t vocab_size = 0,
                       std::chrono::seconds timeout = std::chrono::seconds(60));

  std::size_t vocab_size() const override { return vocab_size_; }
  std::vector<LogProb> next_logprobs(
      std::span<const TokenId> prefix,
      std::span<const TokenId> candidates) const override;
  std::vector<LogProb> full_logprobs(
      std::span<const TokenId> prefix) const override;
  std::vector<std::vector<LogProb>> next_logprobs_batch(
      std::span<const LogprobQuery> queries) const override;
  std::string describe() const override;

  BpeTables fetch_tables() const;
  TokenIds canonical(const std::string& text) const;
  bool healthy() const;

  const std::string& base_url() const { return base_url_; }

 private:
  std::string base_url_;
  std::chrono::seconds timeout_;
  std::size_t vocab_size_ = 0;
};

}  // namespace tokspace
