#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "tokspace/bpe.hpp"
#include "tokspace/mdd.hpp"
#include "tokspace/model.hpp"
#include "tokspace/rng.hpp"

namespace tokspace {

struct ProposalSample {
  Tokenization tokenization;
  LogProb target_logprob = 0.0;    // log p(v, x)
  LogProb proposal_logprob = 0.0;  // log q_LA(v | x)
  LogProb weight = 0.0;            // target - proposal
  bool is_canonical = false;
};

struct TracePoint {
  std::uint64_t n;
  LogProb log_estimate;
  double ess;
};

struct MarginalEstimate {
  LogProb log_estimate = kLogZero;
  std::uint64_t n_samples = 0;
  double ess = 0.0;
  std::uint64_t canonical_draws = 0;
  // Running estimate after 1, 2, 4, ... samples, plus the final count.
  std::vector<TracePoint> trace;
};

struct SamplerOptions {
  ScoringContext context;
  // Marks samples equal to this sequence as canonical.
  std::optional<TokenIds> canonical;
  // Zero the importance weight of canonical samples.
  bool exclude_canonical = false;
};

// One draw from the 1-step look-ahead proposal: at each node the model is
// queried on exactly the outgoing edge labels and renormalized over them.
ProposalSample sample_tokenization(const ScoringModel& model, const Mdd& mdd,
                                   CounterRng& rng,
                                   const SamplerOptions& options = {});
ProposalSample sample_tokenization(const ScoringModel& model, const Mdd& mdd,
                                   std::uint64_t seed,
                                   const SamplerOptions& options = {});

// Sample i uses stream (seed, i), so the parallel and serial versions draw
// identical samples.
std::vector<ProposalSample> draw_samples(const ScoringModel& model,
                                         const Mdd& mdd, std::uint64_t n,
                                         std::uint64_t seed,
                                         const SamplerOptions& options = {});
std::vector<ProposalSample> draw_samples_serial(
    const ScoringModel& model, const Mdd& mdd, std::uint64_t n,
    std::uint64_t seed, const SamplerOptions& options = {});

// Importance weights of the samples, -inf for canonical ones when excluded.
std::vector<LogProb> importance_weights(std::span<const ProposalSample> samples,
                                        bool exclude_canonical);

// log((1/N) sum exp(w_i)) with a pairwise tree, ESS, and the power-of-two
// trace.
MarginalEstimate summarize_weights(std::span<const LogProb> log_weights);

MarginalEstimate estimate_marginal(const ScoringModel& model, const Mdd& mdd,
                                   std::uint64_t n, std::uint64_t seed,
                                   const SamplerOptions& options = {});
MarginalEstimate estimate_marginal_serial(const ScoringModel& model,
                                          const Mdd& mdd, std::uint64_t n,
                                          std::uint64_t seed,
                                          const SamplerOptions& options = {});

// Unbiased estimate of sum over v != canonical of p(v, x).
MarginalEstimate estimate_noncanonical_mass(const ScoringModel& model,
                                            const Mdd& mdd,
                                            const Tokenization& canonical,
                                            std::uint64_t n, std::uint64_t seed,
                                            const ScoringContext& context = {});

}  // namespace tokspace
