#include "tokspace/sampler.hpp"

#include <cmath>

#include "tokspace/error.hpp"
#include "tokspace/logspace.hpp"
#include "tokspace/parallel.hpp"

namespace tokspace {

ProposalSample sample_tokenization(const ScoringModel& model, const Mdd& mdd,
                                   CounterRng& rng,
                                   const SamplerOptions& options) {
  ProposalSample sample;
  TokenIds prefix = options.context.prefix;
  TokenIds& ids = sample.tokenization.ids;
  NodeIndex node = mdd.root();
  while (!mdd.is_terminal(node)) {
    const auto edges = mdd.edges(node);
    TokenIds candidates;
    candidates.reserve(edges.size());
    for (const auto& e : edges) candidates.push_back(e.token);
    const auto lps = model.next_logprobs(prefix, candidates);
    const LogProb norm = log_sum_exp(lps);

    std::size_t pick = edges.size() - 1;
    if (edges.size() > 1) {
      const double u = rng.uniform();
      double cumulative = 0.0;
      for (std::size_t i = 0; i < edges.size(); ++i) {
        cumulative += std::exp(lps[i] - norm);
        if (u < cumulative) {
          pick = i;
          break;
        }
      }
    }
    sample.target_logprob += lps[pick];
    sample.proposal_logprob += lps[pick] - norm;
    ids.push_back(edges[pick].token);
    prefix.push_back(edges[pick].token);
    node = edges[pick].target;
  }
  sample.target_logprob +=
      eos_logprob(model, prefix, options.context.eos);
  sample.weight = sample.target_logprob - sample.proposal_logprob;
  sample.tokenization.text = mdd.text();
  sample.is_canonical = options.canonical && ids == *options.canonical;
  sample.tokenization.is_canonical = sample.is_canonical;
  return sample;
}

ProposalSample sample_tokenization(const ScoringModel& model, const Mdd& mdd,
                                   std::uint64_t seed,
                                   const SamplerOptions& options) {
  CounterRng rng(seed, 0);
  return sample_tokenization(model, mdd, rng, options);
}

std::vector<ProposalSample> draw_samples(const ScoringModel& model,
                                         const Mdd& mdd, std::uint64_t n,
                                         std::uint64_t seed,
                                         const SamplerOptions& options) {
  std::vector<ProposalSample> out(n);
  parallel_for(n, [&](std::size_t i) {
    CounterRng rng(seed, i);
    out[i] = sample_tokenization(model, mdd, rng, options);
  });
  return out;
}

std::vector<ProposalSample> draw_samples_serial(const ScoringModel& model,
                                                const Mdd& mdd,
                                                std::uint64_t n,
                                                std::uint64_t seed,
                                                const SamplerOptions& options) {
  std::vector<ProposalSample> out;
  out.reserve(n);
  for (std::uint64_t i = 0; i < n; ++i) {
    CounterRng rng(seed, i);
    out.push_back(sample_tokenization(model, mdd, rng, options));
  }
  return out;
}

std::vector<LogProb> importance_weights(std::span<const ProposalSample> samples,
                                        bool exclude_canonical) {
  std::vector<LogProb> w;
  w.reserve(samples.size());
  for (const auto& s : samples) {
    w.push_back(exclude_canonical && s.is_canonical ? kLogZero : s.weight);
  }
  return w;
}

MarginalEstimate summarize_weights(std::span<const LogProb> log_weights) {
  MarginalEstimate est;
  est.n_samples = log_weights.size();
  if (log_weights.empty()) return est;
  est.log_estimate = log_mean_exp(log_weights);
  est.ess = effective_sample_size(log_weights);
  for (std::uint64_t m = 1;; m *= 2) {
    const std::uint64_t upto = std::min<std::uint64_t>(m, log_weights.size());
    const auto head = log_weights.first(upto);
    est.trace.push_back({upto, log_mean_exp(head), effective_sample_size(head)});
    if (upto == log_weights.size()) break;
  }
  return est;
}

namespace {

MarginalEstimate finish(std::span<const ProposalSample> samples,
                        const SamplerOptions& options) {
  const auto w = importance_weights(samples, options.exclude_canonical);
  MarginalEstimate est = summarize_weights(w);
  for (const auto& s : samples) est.canonical_draws += s.is_canonical;
  return est;
}

void require_samples(std::uint64_t n) {
  if (n == 0) {
    throw Error(Error::Kind::InvalidArgument, "sample count must be >= 1");
  }
}

}  // namespace

MarginalEstimate estimate_marginal(const ScoringModel& model, const Mdd& mdd,
                                   std::uint64_t n, std::uint64_t seed,
                                   const SamplerOptions& options) {
  require_samples(n);
  return finish(draw_samples(model, mdd, n, seed, options), options);
}

MarginalEstimate estimate_marginal_serial(const ScoringModel& model,
                                          const Mdd& mdd, std::uint64_t n,
                                          std::uint64_t seed,
                                          const SamplerOptions& options) {
  require_samples(n);
  return finish(draw_samples_serial(model, mdd, n, seed, options), options);
}

MarginalEstimate estimate_noncanonical_mass(const ScoringModel& model,
                                            const Mdd& mdd,
                                            const Tokenization& canonical,
                                            std::uint64_t n, std::uint64_t seed,
                                            const ScoringContext& context) {
  SamplerOptions options{context, canonical.ids, true};
  return estimate_marginal(model, mdd, n, seed, options);
}

}  // namespace tokspace
