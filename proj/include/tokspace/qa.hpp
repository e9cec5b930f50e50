#pragma once

#include <cstdint>
#include <filesystem>
#include <istream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "tokspace/bpe.hpp"
#include "tokspace/mdd.hpp"
#include "tokspace/model.hpp"
#include "tokspace/vocab.hpp"

namespace tokspace {

struct QaExample {
  std::string context;
  std::vector<std::string> choices;
  int label = 0;
};

// JSONL, one {"context", "choices", "label"} object per line. Throws
// Error(Format) naming the offending line.
std::vector<QaExample> parse_dataset(std::istream& in);
std::vector<QaExample> load_dataset(const std::filesystem::path& path);

// Everything a classifier needs besides the example itself. The context is
// always canonically encoded; `base` supplies BOS and the optional EOS.
struct QaSetup {
  std::shared_ptr<const BpeTables> tables;
  std::shared_ptr<const ScoringModel> model;
  Pretokenizer pretokenizer = Pretokenizer::WholeString;
  ScoringContext base;
  // Divide canonical scores by token count (ablation only).
  bool length_normalize = false;
};

struct EncodedExample {
  TokenIds context_ids;  // base prefix followed by the canonical context
  std::vector<Tokenization> canonical;  // per choice
  std::vector<Mdd> mdds;                // per choice
};

EncodedExample encode_example(const QaSetup& setup, const QaExample& ex);

struct ClassifierOutput {
  std::vector<double> scores;
  int prediction = 0;
  bool tie_broken = false;
  // Mixture only: every non-canonical mass was zero, canonical scores used.
  bool degenerate = false;
};

// Argmax with the smallest index winning ties.
ClassifierOutput argmax_output(std::vector<double> scores);

ClassifierOutput classify_canonical(const QaSetup& setup, const QaExample& ex);

// Choice i is scored by estimate_marginal with seed derive_stream(seed, i).
ClassifierOutput classify_marginal(const QaSetup& setup, const QaExample& ex,
                                   std::uint64_t n, std::uint64_t seed);

// Per-choice probabilities normalized over the choices.
struct MixtureInputs {
  std::vector<double> p_can;
  std::vector<double> p_noncan;
  bool degenerate = false;  // every non-canonical estimate was zero mass
};

MixtureInputs mixture_inputs(const QaSetup& setup, const QaExample& ex,
                             std::uint64_t n, std::uint64_t seed);

// score_i = alpha p_can(i) + (1 - alpha) p_noncan(i); degenerate inputs fall
// back to p_can for any alpha.
ClassifierOutput mixture_output(const MixtureInputs& inputs, double alpha);

ClassifierOutput classify_mixture(const QaSetup& setup, const QaExample& ex,
                                  double alpha, std::uint64_t n,
                                  std::uint64_t seed);

// Argmax of the normalized non-canonical mass alone (alpha = 0).
ClassifierOutput classify_noncanonical(const QaSetup& setup,
                                       const QaExample& ex, std::uint64_t n,
                                       std::uint64_t seed);

// Pre-drawn importance log weights: pools[example][choice][sample].
using SamplePools = std::vector<std::vector<std::vector<LogProb>>>;

// Example e, choice i draws from seed derive_stream(seed, e, i).
SamplePools draw_pools(const QaSetup& setup,
                       const std::vector<QaExample>& dataset,
                       std::size_t pool_size, std::uint64_t seed);

struct CurvePoint {
  double x;
  double mean;
  double stdev;
};

struct SampleTuning {
  std::size_t best_k = 1;
  std::vector<CurvePoint> curve;  // x = k, accuracy over trials
};

// For each k in grid, `trials` rounds each score every example from a
// uniformly drawn k-subset of its pools (one subset per example and trial,
// applied to every choice). Returns the k with the highest mean accuracy,
// smaller k on ties. Throws Error(PoolSizeMismatch) when pools differ in
// size or a k exceeds the pool size.
SampleTuning tune_samples(const SamplePools& pools,
                          const std::vector<int>& labels,
                          const std::vector<std::size_t>& grid,
                          std::size_t trials, std::uint64_t seed);
SampleTuning tune_samples_serial(const SamplePools& pools,
                                 const std::vector<int>& labels,
                                 const std::vector<std::size_t>& grid,
                                 std::size_t trials, std::uint64_t seed);

struct AlphaTuning {
  double best_alpha = 1.0;
  std::vector<CurvePoint> curve;  // x = alpha, stdev 0
};

// Grid of `resolution` evenly spaced alphas including 0 and 1; ties go to the
// larger alpha.
AlphaTuning tune_alpha(const std::vector<MixtureInputs>& inputs,
                       const std::vector<int>& labels, std::size_t resolution);
AlphaTuning tune_alpha(const QaSetup& setup,
                       const std::vector<QaExample>& dataset,
                       std::size_t resolution, std::uint64_t n,
                       std::uint64_t seed);

enum class Classifier { Canonical, Marginal, Mixture, NonCanonical };

Classifier parse_classifier(const std::string& name);
const char* classifier_name(Classifier classifier);

struct EvalConfig {
  Classifier classifier = Classifier::Canonical;
  std::uint64_t n = 1;
  double alpha = 1.0;
  std::uint64_t seed = 0;
  // Sampling classifiers are rerun with seeds derive_stream(seed, r).
  std::size_t repeats = 1;
};

struct EvalReport {
  EvalConfig config;
  std::size_t examples = 0;
  std::vector<double> accuracy;  // per repeat
  double mean = 0.0;
  double stdev = 0.0;
  std::vector<int> labels;
  std::vector<std::vector<ClassifierOutput>> outputs;  // [repeat][example]
  std::size_t degenerate = 0;
  std::optional<SampleTuning> sample_tuning;
  std::optional<AlphaTuning> alpha_tuning;
};

// Example e uses seed derive_stream(run seed, e); examples run in parallel.
EvalReport evaluate(const QaSetup& setup,
                    const std::vector<QaExample>& dataset,
                    const EvalConfig& config);

nlohmann::json report_to_json(const EvalReport& report);
// One row per (repeat, example).
std::string report_to_csv(const EvalReport& report);

// Plot data "x,mean,stdev" from a report JSON: the tuning curve when present,
// otherwise one row at x = n.
std::string plot_csv(const nlohmann::json& report);

}  // namespace tokspace
