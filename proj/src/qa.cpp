#include "tokspace/qa.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "tokspace/error.hpp"
#include "tokspace/format.hpp"
#include "tokspace/logspace.hpp"
#include "tokspace/parallel.hpp"
#include "tokspace/rng.hpp"
#include "tokspace/sampler.hpp"

namespace tokspace {

using nlohmann::json;

std::vector<QaExample> parse_dataset(std::istream& in) {
  std::vector<QaExample> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::string where = "dataset line " + std::to_string(line_no);
    QaExample ex;
    try {
      const json doc = json::parse(line);
      ex.context = doc.at("context").get<std::string>();
      ex.choices = doc.at("choices").get<std::vector<std::string>>();
      ex.label = doc.at("label").get<int>();
    } catch (const json::exception& e) {
      throw Error(Error::Kind::Format, where + ": " + e.what());
    }
    if (ex.choices.size() < 2) {
      throw Error(Error::Kind::Format, where + ": fewer than two choices");
    }
    if (ex.label < 0 || ex.label >= static_cast<int>(ex.choices.size())) {
      throw Error(Error::Kind::Format, where + ": label out of range");
    }
    if (std::set<std::string>(ex.choices.begin(), ex.choices.end()).size() !=
        ex.choices.size()) {
      throw Error(Error::Kind::Format, where + ": duplicate choices");
    }
    out.push_back(std::move(ex));
  }
  return out;
}

std::vector<QaExample> load_dataset(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(Error::Kind::Format, "cannot open " + path.string());
  return parse_dataset(in);
}

EncodedExample encode_example(const QaSetup& setup, const QaExample& ex) {
  const Vocabulary& vocab = setup.tables->vocab;
  const MergeTable& merges = setup.tables->merges;
  EncodedExample enc;
  enc.context_ids = setup.base.prefix;
  if (!ex.context.empty()) {
    const auto ctx = canonical_encode(
        pretokenize(ex.context, setup.pretokenizer), vocab, merges);
    enc.context_ids.insert(enc.context_ids.end(), ctx.ids.begin(),
                           ctx.ids.end());
  }
  for (const auto& choice : ex.choices) {
    const std::string raw = pretokenize(choice, setup.pretokenizer);
    enc.canonical.push_back(canonical_encode(raw, vocab, merges));
    enc.mdds.push_back(compile_mdd(raw, vocab));
  }
  return enc;
}

ClassifierOutput argmax_output(std::vector<double> scores) {
  ClassifierOutput out;
  out.scores = std::move(scores);
  for (std::size_t i = 1; i < out.scores.size(); ++i) {
    if (out.scores[i] > out.scores[out.prediction]) {
      out.prediction = static_cast<int>(i);
    }
  }
  int attaining = 0;
  for (double s : out.scores) attaining += s == out.scores[out.prediction];
  out.tie_broken = attaining > 1;
  return out;
}

namespace {

std::vector<double> canonical_scores(const QaSetup& setup,
                                     const EncodedExample& enc,
                                     bool length_normalize) {
  std::vector<double> scores;
  for (const auto& tok : enc.canonical) {
    double s = score_continuation(*setup.model, enc.context_ids, tok.ids,
                                  setup.base.eos)
                   .total_logprob;
    if (length_normalize && !tok.ids.empty()) {
      s /= static_cast<double>(tok.ids.size());
    }
    scores.push_back(s);
  }
  return scores;
}

SamplerOptions sampler_options(const QaSetup& setup, const EncodedExample& enc,
                               std::size_t choice, bool exclude_canonical) {
  SamplerOptions options;
  options.context = {enc.context_ids, setup.base.eos};
  options.canonical = enc.canonical[choice].ids;
  options.exclude_canonical = exclude_canonical;
  return options;
}

// exp(x_i) / sum_j exp(x_j), all zeros when every x is -inf.
std::vector<double> normalize(const std::vector<double>& logs) {
  const LogProb total = log_sum_exp(logs);
  std::vector<double> p(logs.size(), 0.0);
  if (total == kLogZero) return p;
  for (std::size_t i = 0; i < logs.size(); ++i) p[i] = std::exp(logs[i] - total);
  return p;
}

}  // namespace

ClassifierOutput classify_canonical(const QaSetup& setup, const QaExample& ex) {
  const auto enc = encode_example(setup, ex);
  return argmax_output(canonical_scores(setup, enc, setup.length_normalize));
}

ClassifierOutput classify_marginal(const QaSetup& setup, const QaExample& ex,
                                   std::uint64_t n, std::uint64_t seed) {
  const auto enc = encode_example(setup, ex);
  std::vector<double> scores;
  for (std::size_t i = 0; i < ex.choices.size(); ++i) {
    scores.push_back(estimate_marginal(*setup.model, enc.mdds[i], n,
                                       derive_stream(seed, i),
                                       sampler_options(setup, enc, i, false))
                         .log_estimate);
  }
  return argmax_output(std::move(scores));
}

MixtureInputs mixture_inputs(const QaSetup& setup, const QaExample& ex,
                             std::uint64_t n, std::uint64_t seed) {
  const auto enc = encode_example(setup, ex);
  MixtureInputs in;
  in.p_can = normalize(canonical_scores(setup, enc, false));
  std::vector<double> noncan;
  for (std::size_t i = 0; i < ex.choices.size(); ++i) {
    noncan.push_back(estimate_marginal(*setup.model, enc.mdds[i], n,
                                       derive_stream(seed, i),
                                       sampler_options(setup, enc, i, true))
                         .log_estimate);
  }
  in.p_noncan = normalize(noncan);
  in.degenerate = log_sum_exp(noncan) == kLogZero;
  return in;
}

ClassifierOutput mixture_output(const MixtureInputs& inputs, double alpha) {
  if (!(alpha >= 0.0 && alpha <= 1.0)) {
    throw Error(Error::Kind::InvalidArgument, "alpha must lie in [0, 1]");
  }
  std::vector<double> scores(inputs.p_can.size());
  for (std::size_t i = 0; i < scores.size(); ++i) {
    scores[i] = inputs.degenerate
                    ? inputs.p_can[i]
                    : alpha * inputs.p_can[i] + (1.0 - alpha) * inputs.p_noncan[i];
  }
  auto out = argmax_output(std::move(scores));
  out.degenerate = inputs.degenerate;
  return out;
}

ClassifierOutput classify_mixture(const QaSetup& setup, const QaExample& ex,
                                  double alpha, std::uint64_t n,
                                  std::uint64_t seed) {
  if (!(alpha >= 0.0 && alpha <= 1.0)) {
    throw Error(Error::Kind::InvalidArgument, "alpha must lie in [0, 1]");
  }
  return mixture_output(mixture_inputs(setup, ex, n, seed), alpha);
}

ClassifierOutput classify_noncanonical(const QaSetup& setup,
                                       const QaExample& ex, std::uint64_t n,
                                       std::uint64_t seed) {
  const auto in = mixture_inputs(setup, ex, n, seed);
  auto out = argmax_output(in.degenerate ? in.p_can : in.p_noncan);
  out.degenerate = in.degenerate;
  return out;
}

SamplePools draw_pools(const QaSetup& setup,
                       const std::vector<QaExample>& dataset,
                       std::size_t pool_size, std::uint64_t seed) {
  if (pool_size == 0) {
    throw Error(Error::Kind::InvalidArgument, "pool size must be >= 1");
  }
  SamplePools pools(dataset.size());
  parallel_for(dataset.size(), [&](std::size_t e) {
    const auto enc = encode_example(setup, dataset[e]);
    for (std::size_t i = 0; i < enc.mdds.size(); ++i) {
      const auto samples = draw_samples_serial(
          *setup.model, enc.mdds[i], pool_size, derive_stream(seed, e, i),
          sampler_options(setup, enc, i, false));
      pools[e].push_back(importance_weights(samples, false));
    }
  });
  return pools;
}

namespace {

struct ScaledPool {
  LogProb shift;
  std::vector<double> values;  // exp(w - shift)
};

struct PreparedPools {
  std::size_t pool_size = 0;
  std::vector<std::vector<ScaledPool>> examples;
};

PreparedPools prepare(const SamplePools& pools, const std::vector<int>& labels,
                      const std::vector<std::size_t>& grid) {
  if (labels.size() != pools.size()) {
    throw Error(Error::Kind::InvalidArgument, "one label per example needed");
  }
  PreparedPools out;
  for (const auto& example : pools) {
    std::vector<ScaledPool> scaled;
    for (const auto& pool : example) {
      if (out.pool_size == 0) out.pool_size = pool.size();
      if (pool.size() != out.pool_size || pool.empty()) {
        throw Error(Error::Kind::PoolSizeMismatch,
                    "sample pools must all hold " +
                        std::to_string(out.pool_size) + " samples");
      }
      ScaledPool sp;
      sp.shift = *std::max_element(pool.begin(), pool.end());
      for (double w : pool) {
        sp.values.push_back(sp.shift == kLogZero ? 0.0 : std::exp(w - sp.shift));
      }
      scaled.push_back(std::move(sp));
    }
    out.examples.push_back(std::move(scaled));
  }
  for (std::size_t k : grid) {
    if (k == 0 || k > out.pool_size) {
      throw Error(Error::Kind::PoolSizeMismatch,
                  "k = " + std::to_string(k) + " outside 1.." +
                      std::to_string(out.pool_size));
    }
  }
  return out;
}

// Mean and standard deviation of accuracy over trials for one k.
CurvePoint evaluate_k(const PreparedPools& prepared,
                      const std::vector<int>& labels, std::size_t k,
                      std::size_t trials, std::uint64_t seed) {
  const std::size_t pool = prepared.pool_size;
  std::vector<std::uint32_t> perm(pool);
  for (std::size_t i = 0; i < pool; ++i) perm[i] = static_cast<std::uint32_t>(i);
  std::vector<std::uint32_t> swaps(k);
  std::vector<double> accuracy;
  accuracy.reserve(trials);
  for (std::size_t t = 0; t < trials; ++t) {
    std::size_t correct = 0;
    for (std::size_t e = 0; e < prepared.examples.size(); ++e) {
      // Partial Fisher-Yates, undone afterwards so every (k, t, e) starts
      // from the identity permutation.
      CounterRng rng(derive_stream(seed, k, t), e);
      for (std::size_t j = 0; j < k; ++j) {
        const auto r = static_cast<std::uint32_t>(j + rng.below(pool - j));
        swaps[j] = r;
        std::swap(perm[j], perm[r]);
      }
      const auto& choices = prepared.examples[e];
      int best = 0;
      double best_score = kLogZero;
      for (std::size_t i = 0; i < choices.size(); ++i) {
        double sum = 0.0;
        for (std::size_t j = 0; j < k; ++j) sum += choices[i].values[perm[j]];
        const double score =
            sum > 0.0 ? choices[i].shift + std::log(sum) : kLogZero;
        if (i == 0 || score > best_score) {
          best_score = score;
          best = static_cast<int>(i);
        }
      }
      correct += best == labels[e];
      for (std::size_t j = k; j-- > 0;) std::swap(perm[j], perm[swaps[j]]);
    }
    accuracy.push_back(static_cast<double>(correct) /
                       static_cast<double>(prepared.examples.size()));
  }
  double mean = 0.0;
  for (double a : accuracy) mean += a;
  mean /= static_cast<double>(trials);
  double var = 0.0;
  for (double a : accuracy) var += (a - mean) * (a - mean);
  const double stdev =
      trials > 1 ? std::sqrt(var / static_cast<double>(trials - 1)) : 0.0;
  return {static_cast<double>(k), mean, stdev};
}

SampleTuning pick_k(std::vector<CurvePoint> curve) {
  SampleTuning out;
  std::size_t best = 0;
  for (std::size_t i = 1; i < curve.size(); ++i) {
    const bool better = curve[i].mean > curve[best].mean ||
                        (curve[i].mean == curve[best].mean &&
                         curve[i].x < curve[best].x);
    if (better) best = i;
  }
  out.best_k = curve.empty() ? 1 : static_cast<std::size_t>(curve[best].x);
  out.curve = std::move(curve);
  return out;
}

void require_trials(std::size_t trials) {
  if (trials == 0) {
    throw Error(Error::Kind::InvalidArgument, "trials must be >= 1");
  }
}

}  // namespace

SampleTuning tune_samples(const SamplePools& pools,
                          const std::vector<int>& labels,
                          const std::vector<std::size_t>& grid,
                          std::size_t trials, std::uint64_t seed) {
  require_trials(trials);
  const auto prepared = prepare(pools, labels, grid);
  std::vector<CurvePoint> curve(grid.size());
  parallel_for(grid.size(), [&](std::size_t g) {
    curve[g] = evaluate_k(prepared, labels, grid[g], trials, seed);
  });
  return pick_k(std::move(curve));
}

SampleTuning tune_samples_serial(const SamplePools& pools,
                                 const std::vector<int>& labels,
                                 const std::vector<std::size_t>& grid,
                                 std::size_t trials, std::uint64_t seed) {
  require_trials(trials);
  const auto prepared = prepare(pools, labels, grid);
  std::vector<CurvePoint> curve;
  for (std::size_t k : grid) {
    curve.push_back(evaluate_k(prepared, labels, k, trials, seed));
  }
  return pick_k(std::move(curve));
}

AlphaTuning tune_alpha(const std::vector<MixtureInputs>& inputs,
                       const std::vector<int>& labels, std::size_t resolution) {
  if (resolution < 2) {
    throw Error(Error::Kind::InvalidArgument,
                "alpha grid needs at least 2 points");
  }
  if (labels.size() != inputs.size() || inputs.empty()) {
    throw Error(Error::Kind::InvalidArgument, "one label per example needed");
  }
  AlphaTuning out;
  std::size_t best = resolution - 1;
  for (std::size_t j = 0; j < resolution; ++j) {
    const double alpha =
        static_cast<double>(j) / static_cast<double>(resolution - 1);
    std::size_t correct = 0;
    for (std::size_t e = 0; e < inputs.size(); ++e) {
      correct += mixture_output(inputs[e], alpha).prediction == labels[e];
    }
    out.curve.push_back({alpha,
                         static_cast<double>(correct) /
                             static_cast<double>(inputs.size()),
                         0.0});
  }
  for (std::size_t j = resolution; j-- > 0;) {
    if (out.curve[j].mean > out.curve[best].mean) best = j;
  }
  out.best_alpha = out.curve[best].x;
  return out;
}

AlphaTuning tune_alpha(const QaSetup& setup,
                       const std::vector<QaExample>& dataset,
                       std::size_t resolution, std::uint64_t n,
                       std::uint64_t seed) {
  std::vector<MixtureInputs> inputs(dataset.size());
  std::vector<int> labels;
  for (const auto& ex : dataset) labels.push_back(ex.label);
  parallel_for(dataset.size(), [&](std::size_t e) {
    inputs[e] = mixture_inputs(setup, dataset[e], n, derive_stream(seed, e));
  });
  return tune_alpha(inputs, labels, resolution);
}

Classifier parse_classifier(const std::string& name) {
  if (name == "canonical") return Classifier::Canonical;
  if (name == "marginal") return Classifier::Marginal;
  if (name == "mixture") return Classifier::Mixture;
  if (name == "noncanonical") return Classifier::NonCanonical;
  throw Error(Error::Kind::InvalidArgument, "unknown classifier '" + name + "'");
}

const char* classifier_name(Classifier classifier) {
  switch (classifier) {
    case Classifier::Canonical: return "canonical";
    case Classifier::Marginal: return "marginal";
    case Classifier::Mixture: return "mixture";
    case Classifier::NonCanonical: return "noncanonical";
  }
  return "unknown";
}

EvalReport evaluate(const QaSetup& setup,
                    const std::vector<QaExample>& dataset,
                    const EvalConfig& config) {
  if (config.repeats == 0) {
    throw Error(Error::Kind::InvalidArgument, "repeats must be >= 1");
  }
  EvalReport report;
  report.config = config;
  report.examples = dataset.size();
  for (const auto& ex : dataset) report.labels.push_back(ex.label);
  const std::size_t repeats =
      config.classifier == Classifier::Canonical ? 1 : config.repeats;
  report.config.repeats = repeats;

  for (std::size_t r = 0; r < repeats; ++r) {
    const std::uint64_t run_seed = derive_stream(config.seed, r);
    std::vector<ClassifierOutput> outputs(dataset.size());
    parallel_for(dataset.size(), [&](std::size_t e) {
      const std::uint64_t seed = derive_stream(run_seed, e);
      switch (config.classifier) {
        case Classifier::Canonical:
          outputs[e] = classify_canonical(setup, dataset[e]);
          break;
        case Classifier::Marginal:
          outputs[e] = classify_marginal(setup, dataset[e], config.n, seed);
          break;
        case Classifier::Mixture:
          outputs[e] = classify_mixture(setup, dataset[e], config.alpha,
                                        config.n, seed);
          break;
        case Classifier::NonCanonical:
          outputs[e] = classify_noncanonical(setup, dataset[e], config.n, seed);
          break;
      }
    });
    std::size_t correct = 0;
    for (std::size_t e = 0; e < dataset.size(); ++e) {
      correct += outputs[e].prediction == dataset[e].label;
      report.degenerate += outputs[e].degenerate;
    }
    report.accuracy.push_back(
        dataset.empty() ? 0.0
                        : static_cast<double>(correct) /
                              static_cast<double>(dataset.size()));
    report.outputs.push_back(std::move(outputs));
  }
  for (double a : report.accuracy) report.mean += a;
  report.mean /= static_cast<double>(repeats);
  double var = 0.0;
  for (double a : report.accuracy) var += (a - report.mean) * (a - report.mean);
  report.stdev =
      repeats > 1 ? std::sqrt(var / static_cast<double>(repeats - 1)) : 0.0;
  return report;
}

namespace {

json curve_json(const std::vector<CurvePoint>& curve) {
  json out = json::array();
  for (const auto& p : curve) {
    out.push_back({{"x", json_number(p.x)},
                   {"mean", json_number(p.mean)},
                   {"stdev", json_number(p.stdev)}});
  }
  return out;
}

}  // namespace

json report_to_json(const EvalReport& report) {
  json doc;
  doc["classifier"] = classifier_name(report.config.classifier);
  doc["n"] = report.config.n;
  doc["alpha"] = json_number(report.config.alpha);
  doc["seed"] = report.config.seed;
  doc["repeats"] = report.config.repeats;
  doc["examples"] = report.examples;
  doc["accuracy"] = json::array();
  for (double a : report.accuracy) doc["accuracy"].push_back(json_number(a));
  doc["mean"] = json_number(report.mean);
  doc["stdev"] = json_number(report.stdev);
  doc["degenerate"] = report.degenerate;
  json items = json::array();
  for (std::size_t e = 0; e < report.examples; ++e) {
    json item;
    item["label"] = report.labels[e];
    item["predictions"] = json::array();
    for (const auto& run : report.outputs) {
      item["predictions"].push_back(run[e].prediction);
    }
    const auto& first = report.outputs.front()[e];
    item["scores"] = json::array();
    for (double s : first.scores) item["scores"].push_back(json_number(s));
    item["tie_broken"] = first.tie_broken;
    item["degenerate"] = first.degenerate;
    items.push_back(std::move(item));
  }
  doc["items"] = std::move(items);
  if (report.sample_tuning) {
    doc["sample_tuning"] = {{"best_k", report.sample_tuning->best_k},
                            {"curve", curve_json(report.sample_tuning->curve)}};
  }
  if (report.alpha_tuning) {
    doc["alpha_tuning"] = {
        {"best_alpha", json_number(report.alpha_tuning->best_alpha)},
        {"curve", curve_json(report.alpha_tuning->curve)}};
  }
  return doc;
}

std::string report_to_csv(const EvalReport& report) {
  std::ostringstream out;
  out << "repeat,example,label,prediction,correct,tie_broken,degenerate,scores\n";
  for (std::size_t r = 0; r < report.outputs.size(); ++r) {
    for (std::size_t e = 0; e < report.examples; ++e) {
      const auto& o = report.outputs[r][e];
      out << r << ',' << e << ',' << report.labels[e] << ',' << o.prediction
          << ',' << (o.prediction == report.labels[e]) << ','
          << o.tie_broken << ',' << o.degenerate << ',';
      for (std::size_t i = 0; i < o.scores.size(); ++i) {
        out << (i ? ";" : "") << format_number(o.scores[i]);
      }
      out << '\n';
    }
  }
  return out.str();
}

std::string plot_csv(const json& report) {
  std::ostringstream out;
  out << "x,mean,stdev\n";
  auto number = [](const json& v) {
    return v.is_null() ? std::string("nan") : format_number(v.get<double>());
  };
  const json* curve = nullptr;
  if (report.contains("sample_tuning")) {
    curve = &report["sample_tuning"]["curve"];
  } else if (report.contains("alpha_tuning")) {
    curve = &report["alpha_tuning"]["curve"];
  }
  try {
    if (curve != nullptr) {
      for (const auto& p : *curve) {
        out << number(p.at("x")) << ',' << number(p.at("mean")) << ','
            << number(p.at("stdev")) << '\n';
      }
    } else {
      out << report.at("n").get<std::uint64_t>() << ','
          << number(report.at("mean")) << ',' << number(report.at("stdev"))
          << '\n';
    }
  } catch (const json::exception& e) {
    throw Error(Error::Kind::Format, std::string("bad report: ") + e.what());
  }
  return out.str();
}

}  // namespace tokspace
