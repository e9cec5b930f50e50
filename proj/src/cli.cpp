#include "tokspace/cli.hpp"

#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "tokspace/bnb.hpp"
#include "tokspace/bpe.hpp"
#include "tokspace/canonicity.hpp"
#include "tokspace/error.hpp"
#include "tokspace/exact.hpp"
#include "tokspace/format.hpp"
#include "tokspace/hardness.hpp"
#include "tokspace/logspace.hpp"
#include "tokspace/mdd.hpp"
#include "tokspace/model_spec.hpp"
#include "tokspace/parallel.hpp"
#include "tokspace/qa.hpp"
#include "tokspace/remote_model.hpp"
#include "tokspace/sampler.hpp"

namespace tokspace {

using nlohmann::json;

namespace {

// A usage problem detected after parsing (e.g. a conditionally required
// flag); reported like a parse error.
struct UsageError : std::runtime_error {
  UsageError(const CLI::App* app, const std::string& message)
      : std::runtime_error(message), app(app) {}
  const CLI::App* app;
};

struct TablesOptions {
  std::string vocab;
  std::string pretok = "auto";
};

struct ModelOptions {
  std::string spec = "uniform";
  bool no_bos = false;
  bool with_eos = false;
};

void add_tables_options(CLI::App* sub, TablesOptions& o) {
  sub->add_option("--vocab", o.vocab, "Vocabulary JSON, vocab.txt or directory")
      ->required();
  sub->add_option("--pretok", o.pretok,
                  "Pretokenizer: auto (metaspace when the vocabulary has "
                  "U+2581), none, metaspace")
      ->check(CLI::IsMember({"auto", "none", "metaspace"}));
}

void add_model_options(CLI::App* sub, ModelOptions& o) {
  sub->add_option("--model", o.spec,
                  "uniform | ngram:<file> | table:<file> | remote:<url>")
      ->capture_default_str();
  sub->add_flag("--no-bos", o.no_bos, "Do not prepend the BOS token");
  sub->add_flag("--with-eos", o.with_eos,
                "Include log p(EOS | tokens) in every score");
}

struct Loaded {
  std::shared_ptr<const BpeTables> tables;
  Pretokenizer pretokenizer = Pretokenizer::WholeString;
};

Loaded load(const TablesOptions& o) {
  Loaded l;
  l.tables = std::make_shared<const BpeTables>(load_tables(o.vocab));
  if (o.pretok == "metaspace" ||
      (o.pretok == "auto" && l.tables->vocab.find(kMetaspace))) {
    l.pretokenizer = Pretokenizer::Metaspace;
  }
  return l;
}

struct Scoring {
  std::shared_ptr<const ScoringModel> model;
  ScoringContext context;
};

Scoring make_scoring(const ModelOptions& o, const Vocabulary& vocab) {
  Scoring s;
  s.model = make_model(o.spec, vocab.size());
  if (!o.no_bos && vocab.bos() &&
      static_cast<std::size_t>(*vocab.bos()) < s.model->vocab_size()) {
    s.context.prefix.push_back(*vocab.bos());
  }
  if (o.with_eos) {
    if (!vocab.eos()) {
      throw Error(Error::Kind::InvalidArgument,
                  "--with-eos needs an EOS token in the vocabulary");
    }
    s.context.eos = *vocab.eos();
  }
  return s;
}

json tokens_json(std::span<const TokenId> ids, const Vocabulary& vocab) {
  json out = json::array();
  for (TokenId id : ids) out.push_back(vocab.token(id));
  return out;
}

std::string tokens_line(std::span<const TokenId> ids, const Vocabulary& vocab) {
  return tokens_json(ids, vocab).dump(-1, ' ', false,
                                      json::error_handler_t::replace);
}

void emit_json(std::ostream& out, const json& doc) {
  out << doc.dump(2, ' ', false, json::error_handler_t::replace) << '\n';
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream f(path);
  if (!f) throw Error(Error::Kind::Format, "cannot write " + path);
  f << content;
}

// ---------------------------------------------------------------- mdd
struct MddOptions {
  TablesOptions tables;
  std::string text;
  bool count = false;
  std::optional<std::uint64_t> enumerate;
  bool dot = false;
  bool json = false;
};

int run_mdd(const MddOptions& o, std::ostream& out) {
  const auto l = load(o.tables);
  const Vocabulary& vocab = l.tables->vocab;
  const Mdd mdd = compile_mdd(pretokenize(o.text, l.pretokenizer), vocab);
  if (o.dot) {
    out << to_dot(mdd, vocab);
    return kExitOk;
  }
  const BigCount count = count_tokenizations(mdd);
  std::vector<TokenIds> paths;
  if (o.enumerate) paths = enumerate_paths(mdd, *o.enumerate);
  if (o.json) {
    json doc{{"text", mdd.text()},
             {"nodes", mdd.node_count()},
             {"edges", mdd.edge_count()},
             {"count", count.str()}};
    if (o.enumerate) {
      doc["paths"] = json::array();
      for (const auto& p : paths) {
        doc["paths"].push_back({{"ids", p}, {"tokens", tokens_json(p, vocab)}});
      }
    }
    emit_json(out, doc);
    return kExitOk;
  }
  if (o.enumerate) {
    for (const auto& p : paths) out << tokens_line(p, vocab) << '\n';
  } else {
    out << count.str() << '\n';
  }
  return kExitOk;
}

// ---------------------------------------------------------------- exact
struct ExactCliOptions {
  TablesOptions tables;
  ModelOptions model;
  std::string text;
  bool marginal = false;
  bool mle = false;
  std::uint64_t path_cap = 1'000'000;
  bool json = false;
};

int run_exact(const ExactCliOptions& o, std::ostream& out) {
  const auto l = load(o.tables);
  const Vocabulary& vocab = l.tables->vocab;
  const auto s = make_scoring(o.model, vocab);
  const Mdd mdd = compile_mdd(pretokenize(o.text, l.pretokenizer), vocab);
  ExactOptions options{o.path_cap, s.context};
  const BigCount count = count_tokenizations(mdd);
  json doc{{"text", mdd.text()}, {"paths", count.str()}};
  if (o.mle) {
    const auto best = exact_most_likely(*s.model, mdd, options);
    doc["mode"] = "mle";
    doc["logprob"] = json_number(best.logprob);
    doc["ids"] = best.tokenization.ids;
    doc["tokens"] = tokens_json(best.tokenization.ids, vocab);
    if (o.json) {
      emit_json(out, doc);
    } else {
      out << "logprob: " << format_number(best.logprob) << '\n'
          << "tokens: " << tokens_line(best.tokenization.ids, vocab) << '\n';
    }
  } else {
    const LogProb value = exact_marginal(*s.model, mdd, options);
    doc["mode"] = "marginal";
    doc["logprob"] = json_number(value);
    if (o.json) {
      emit_json(out, doc);
    } else {
      out << "logprob: " << format_number(value) << '\n'
          << "paths: " << count.str() << '\n';
    }
  }
  return kExitOk;
}

// ---------------------------------------------------------------- mle
struct MleOptions {
  TablesOptions tables;
  ModelOptions model;
  std::string text;
  double budget = 3600.0;
  bool parallel = false;
  bool json = false;
  std::string out;
};

json scored_json(std::span<const TokenId> ids, LogProb lp,
                 const Vocabulary& vocab) {
  return {{"ids", TokenIds(ids.begin(), ids.end())},
          {"tokens", tokens_json(ids, vocab)},
          {"logprob", json_number(lp)}};
}

int run_mle(const MleOptions& o, std::ostream& out) {
  const auto l = load(o.tables);
  const Vocabulary& vocab = l.tables->vocab;
  const auto s = make_scoring(o.model, vocab);
  const std::string raw = pretokenize(o.text, l.pretokenizer);
  const Mdd mdd = compile_mdd(raw, vocab);
  const Tokenization canonical = canonical_encode(raw, vocab, l.tables->merges);
  SearchOptions options;
  options.budget = std::chrono::duration<double>(o.budget);
  options.context = s.context;
  options.parallel = o.parallel;
  const SearchReport r = branch_and_bound(*s.model, mdd, canonical, options);

  json doc{{"text", mdd.text()},
           {"best", scored_json(r.best.ids, r.best_logprob, vocab)},
           {"canonical", scored_json(canonical.ids, r.canonical_logprob, vocab)},
           {"nodes_expanded", r.nodes_expanded},
           {"pruned", r.pruned},
           {"timed_out", r.timed_out},
           {"elapsed_seconds", json_number(r.elapsed.count())},
           {"improved_over_canonical", r.improved_over_canonical}};
  doc["trace"] = json::array();
  for (const auto& u : r.trace) {
    doc["trace"].push_back({{"nodes_expanded", u.nodes_expanded},
                            {"logprob", json_number(u.logprob)}});
  }
  if (!o.out.empty()) {
    write_file(o.out, doc.dump(2, ' ', false, json::error_handler_t::replace) +
                          "\n");
  }
  if (o.json) {
    emit_json(out, doc);
    return kExitOk;
  }
  out << "best: " << tokens_line(r.best.ids, vocab) << '\n'
      << "best logprob: " << format_number(r.best_logprob) << '\n'
      << "canonical: " << tokens_line(canonical.ids, vocab) << '\n'
      << "canonical logprob: " << format_number(r.canonical_logprob) << '\n'
      << "improved over canonical: "
      << (r.improved_over_canonical ? "yes" : "no") << '\n'
      << "nodes expanded: " << r.nodes_expanded << '\n'
      << "pruned: " << r.pruned << '\n'
      << "timed out: " << (r.timed_out ? "yes" : "no") << '\n'
      << "elapsed seconds: " << format_number(r.elapsed.count()) << '\n';
  return kExitOk;
}

// ---------------------------------------------------------------- marginal
struct MarginalCliOptions {
  TablesOptions tables;
  ModelOptions model;
  std::string text;
  std::uint64_t n = 1000;
  std::uint64_t seed = 0;
  bool exclude_canonical = false;
  std::string trace;
  bool json = false;
};

int run_marginal(const MarginalCliOptions& o, std::ostream& out) {
  const auto l = load(o.tables);
  const Vocabulary& vocab = l.tables->vocab;
  const auto s = make_scoring(o.model, vocab);
  const std::string raw = pretokenize(o.text, l.pretokenizer);
  const Mdd mdd = compile_mdd(raw, vocab);
  SamplerOptions options;
  options.context = s.context;
  options.canonical = canonical_encode(raw, vocab, l.tables->merges).ids;
  options.exclude_canonical = o.exclude_canonical;
  const MarginalEstimate est =
      estimate_marginal(*s.model, mdd, o.n, o.seed, options);

  if (!o.trace.empty()) {
    std::ostringstream csv;
    csv << "n,log_estimate,ess\n";
    for (const auto& p : est.trace) {
      csv << p.n << ',' << format_number(p.log_estimate) << ','
          << format_number(p.ess) << '\n';
    }
    write_file(o.trace, csv.str());
  }
  if (o.json) {
    json doc{{"text", mdd.text()},
             {"n", est.n_samples},
             {"seed", o.seed},
             {"exclude_canonical", o.exclude_canonical},
             {"log_estimate", json_number(est.log_estimate)},
             {"ess", json_number(est.ess)},
             {"canonical_draws", est.canonical_draws}};
    doc["trace"] = json::array();
    for (const auto& p : est.trace) {
      doc["trace"].push_back({{"n", p.n},
                              {"log_estimate", json_number(p.log_estimate)},
                              {"ess", json_number(p.ess)}});
    }
    emit_json(out, doc);
    return kExitOk;
  }
  out << "logprob: " << format_number(est.log_estimate) << '\n'
      << "samples: " << est.n_samples << '\n'
      << "ess: " << format_number(est.ess) << '\n'
      << "canonical draws: " << est.canonical_draws << '\n';
  return kExitOk;
}

// ---------------------------------------------------------------- hardness
struct HardnessOptions {
  std::string cnf;
  int theorem = 1;
  std::uint64_t path_cap = 1'000'000;
  bool json = false;
};

int run_hardness(const HardnessOptions& o, std::ostream& out,
                 std::ostream& err) {
  const CnfFormula cnf = parse_dimacs_file(o.cnf);
  const Theorem theorem =
      o.theorem == 1 ? Theorem::MostLikely : Theorem::Marginal;
  const ReductionInstance inst = build_reduction(theorem, cnf);
  const Mdd mdd = compile_mdd(inst.text, inst.tables.vocab);
  const std::uint64_t brute = brute_force_count(cnf);
  ExactOptions options;
  options.path_cap = o.path_cap;

  json doc{{"theorem", o.theorem},
           {"n_vars", cnf.n_vars},
           {"clauses", cnf.clauses.size()},
           {"text", inst.text},
           {"paths", count_tokenizations(mdd).str()},
           {"brute_force_count", brute},
           {"satisfiable", brute > 0}};
  bool agrees = false;
  std::ostringstream human;
  if (theorem == Theorem::MostLikely) {
    const auto best = exact_most_likely(*inst.model, mdd, options);
    const bool above = best.logprob > inst.threshold();
    agrees = above == (brute > 0);
    doc["threshold_logprob"] = json_number(inst.threshold());
    doc["best_logprob"] = json_number(best.logprob);
    doc["best_ids"] = best.tokenization.ids;
    doc["best_tokens"] = tokens_json(best.tokenization.ids, inst.tables.vocab);
    doc["verdict"] = above ? "SAT" : "UNSAT";
    human << "threshold logprob: " << format_number(inst.threshold()) << '\n'
          << "most likely logprob: " << format_number(best.logprob) << '\n'
          << "most likely tokens: "
          << tokens_line(best.tokenization.ids, inst.tables.vocab) << '\n'
          << "comparison: " << format_number(best.logprob)
          << (above ? " > " : " <= ") << format_number(inst.threshold())
          << '\n'
          << "verdict: " << (above ? "SAT" : "UNSAT") << '\n';
  } else {
    const LogProb marginal = exact_marginal(*inst.model, mdd, options);
    doc["marginal_logprob"] = json_number(marginal);
    human << "marginal logprob: " << format_number(marginal) << '\n';
    const std::uint64_t recovered = recover_count(inst, marginal);
    const auto [lo, hi] = inst.window(recovered);
    agrees = recovered == brute;
    doc["recovered_count"] = recovered;
    doc["window_logprob"] = {json_number(lo), json_number(hi)};
    doc["verdict"] = recovered > 0 ? "SAT" : "UNSAT";
    human << "window logprob: (" << format_number(lo) << ", "
          << format_number(hi) << ")\n"
          << "recovered count: " << recovered << '\n'
          << "verdict: " << (recovered > 0 ? "SAT" : "UNSAT") << '\n';
  }
  doc["agrees_with_brute_force"] = agrees;
  if (o.json) {
    emit_json(out, doc);
  } else {
    out << "text: " << inst.text << '\n'
        << "tokenizations: " << doc["paths"].get<std::string>() << '\n'
        << human.str() << "brute-force count: " << brute << '\n'
        << "agrees with brute force: " << (agrees ? "yes" : "no") << '\n';
  }
  if (!agrees) {
    err << "error: reduction disagrees with the truth-table count\n";
    return kExitDomain;
  }
  return kExitOk;
}

// ---------------------------------------------------------------- qa
struct QaCliOptions {
  TablesOptions tables;
  ModelOptions model;
  std::string dataset;
  std::string validation;
  std::string classifier = "canonical";
  std::uint64_t n = 16;
  double alpha = 1.0;
  bool tune_k = false;
  bool tune_alpha = false;
  std::size_t pool = 256;
  std::size_t trials = 256;
  std::size_t alpha_grid = 11;
  std::size_t repeats = 1;
  std::optional<std::uint64_t> seed;
  bool length_normalize = false;
  std::string out;
  std::string csv;
};

int run_qa(const QaCliOptions& o, const CLI::App* sub, std::ostream& out) {
  const Classifier classifier = parse_classifier(o.classifier);
  const bool samples =
      classifier != Classifier::Canonical || o.tune_k || o.tune_alpha;
  if (samples && !o.seed) {
    throw UsageError(sub, "--seed is required for sampling classifiers and "
                          "tuning");
  }
  if (o.alpha < 0.0 || o.alpha > 1.0) {
    throw UsageError(sub, "--alpha must lie in [0, 1]");
  }
  const std::uint64_t seed = o.seed.value_or(0);
  const auto l = load(o.tables);
  const auto s = make_scoring(o.model, l.tables->vocab);
  QaSetup setup{l.tables, s.model, l.pretokenizer, s.context,
                o.length_normalize};
  const auto dataset = load_dataset(o.dataset);
  const auto validation =
      o.validation.empty() ? dataset : load_dataset(o.validation);

  EvalConfig config;
  config.classifier = classifier;
  config.n = o.n;
  config.alpha = o.alpha;
  config.seed = seed;
  config.repeats = o.repeats;

  std::optional<SampleTuning> k_tuning;
  std::optional<AlphaTuning> a_tuning;
  std::vector<int> labels;
  for (const auto& ex : validation) labels.push_back(ex.label);
  if (o.tune_k) {
    const auto pools =
        draw_pools(setup, validation, o.pool, derive_stream(seed, 1));
    std::vector<std::size_t> grid;
    for (std::size_t k = 1; k <= o.pool; ++k) grid.push_back(k);
    k_tuning = tune_samples(pools, labels, grid, o.trials,
                            derive_stream(seed, 2));
    config.n = k_tuning->best_k;
  }
  if (o.tune_alpha) {
    a_tuning = tune_alpha(setup, validation, o.alpha_grid, config.n,
                          derive_stream(seed, 3));
    config.alpha = a_tuning->best_alpha;
  }
  EvalReport report = evaluate(setup, dataset, config);
  report.sample_tuning = k_tuning;
  report.alpha_tuning = a_tuning;
  const json doc = report_to_json(report);
  if (!o.csv.empty()) write_file(o.csv, report_to_csv(report));
  if (o.out.empty()) {
    emit_json(out, doc);
  } else {
    write_file(o.out,
               doc.dump(2, ' ', false, json::error_handler_t::replace) + "\n");
    out << "classifier: " << classifier_name(classifier) << '\n'
        << "examples: " << report.examples << '\n'
        << "n: " << config.n << '\n'
        << "alpha: " << format_number(config.alpha) << '\n'
        << "accuracy: " << format_number(report.mean) << '\n'
        << "stdev: " << format_number(report.stdev) << '\n';
  }
  return kExitOk;
}

// ---------------------------------------------------------------- qa-plot
struct QaPlotOptions {
  std::string report;
  std::string out;
};

int run_qa_plot(const QaPlotOptions& o, std::ostream& out) {
  std::ifstream in(o.report);
  if (!in) throw Error(Error::Kind::Format, "cannot open " + o.report);
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::exception& e) {
    throw Error(Error::Kind::Format, o.report + ": " + e.what());
  }
  const std::string csv = plot_csv(doc);
  if (o.out.empty()) {
    out << csv;
  } else {
    write_file(o.out, csv);
  }
  return kExitOk;
}

// ---------------------------------------------------------------- canonicity
struct CanonicityOptions {
  TablesOptions tables;
  std::string samples;
  bool json = false;
};

int run_canonicity(const CanonicityOptions& o, std::ostream& out,
                   std::ostream& err) {
  const auto l = load(o.tables);
  const auto table =
      canonicity_rate(std::filesystem::path(o.samples), l.tables->vocab,
                      l.tables->merges);
  for (const auto& w : table.warnings) err << "warning: " << w << '\n';
  if (o.json) {
    json doc{{"sequences", table.sequences}, {"skipped", table.skipped}};
    doc["rows"] = json::array();
    for (const auto& r : table.rows) {
      doc["rows"].push_back({{"length", r.length},
                             {"sequences", r.sequences},
                             {"canonical", r.canonical},
                             {"rate", json_number(r.rate)}});
    }
    emit_json(out, doc);
    return kExitOk;
  }
  out << "length,sequences,canonical,rate\n";
  for (const auto& r : table.rows) {
    out << r.length << ',' << r.sequences << ',' << r.canonical << ','
        << format_number(r.rate) << '\n';
  }
  return kExitOk;
}

// ---------------------------------------------------------------- bridge
struct BridgeOptions {
  std::string url;
  std::string text;
  bool json = false;
};

int run_bridge_check(const BridgeOptions& o, const CLI::App* sub,
                     std::ostream& out) {
  std::string url = o.url;
  if (url.empty()) {
    const char* env = std::getenv(kBridgeUrlVariable);
    if (env == nullptr || *env == '\0') {
      throw UsageError(sub, std::string("--url or ") + kBridgeUrlVariable +
                                " is required");
    }
    url = env;
  }
  json doc{{"url", url}};
  // Probe health before anything that would throw on a dead server.
  const RemoteModel probe(url, 1);
  const bool healthy = probe.healthy();
  doc["healthy"] = healthy;
  bool ok = healthy;
  if (healthy) {
    const RemoteModel model(url);
    doc["vocab_size"] = model.vocab_size();
    const auto lps = model.full_logprobs({});
    const double error = std::abs(log_sum_exp(lps));
    doc["normalization_error"] = json_number(error);
    // Checkpoints compute the softmax in reduced precision.
    ok = ok && error <= 1e-4;
    if (!o.text.empty()) {
      const TokenIds ids = model.canonical(o.text);
      doc["canonical_ids"] = ids;
    }
  }
  doc["ok"] = ok;
  if (o.json) {
    emit_json(out, doc);
  } else {
    out << "url: " << url << '\n' << "healthy: " << (healthy ? "yes" : "no")
        << '\n';
    if (healthy) {
      out << "vocab size: " << doc["vocab_size"].get<std::size_t>() << '\n'
          << "normalization error: "
          << format_number(doc["normalization_error"].get<double>()) << '\n';
      if (doc.contains("canonical_ids")) {
        out << "canonical ids: " << doc["canonical_ids"].dump() << '\n';
      }
    }
    out << "ok: " << (ok ? "yes" : "no") << '\n';
  }
  return ok ? kExitOk : kExitDomain;
}

const CLI::App* deepest_parsed(const CLI::App& app) {
  for (const CLI::App* sub : app.get_subcommands()) return sub;
  return &app;
}

}  // namespace

int dispatch(int argc, const char* const* argv, std::ostream& out,
             std::ostream& err) {
  CLI::App app{"Tokenization-space toolkit", "tokspace"};
  app.require_subcommand(1);
  app.set_config("--config", "", "TOML file mirroring the flags");
  int threads = 0;
  app.add_option("--threads", threads, "Cap on worker threads (0 = default)");

  MddOptions mdd_o;
  auto* mdd = app.add_subcommand("mdd", "Compile the tokenization diagram");
  add_tables_options(mdd, mdd_o.tables);
  mdd->add_option("--text", mdd_o.text, "Source text")->required();
  auto* count_flag = mdd->add_flag("--count", mdd_o.count, "Print the count");
  auto* enum_opt = mdd->add_option("--enumerate", mdd_o.enumerate,
                                   "Print up to N tokenizations");
  auto* dot_flag = mdd->add_flag("--dot", mdd_o.dot, "Print Graphviz text");
  count_flag->excludes(enum_opt)->excludes(dot_flag);
  enum_opt->excludes(dot_flag);
  mdd->add_flag("--json", mdd_o.json, "JSON output");

  ExactCliOptions exact_o;
  auto* exact = app.add_subcommand("exact", "Exhaustive marginal or argmax");
  add_tables_options(exact, exact_o.tables);
  add_model_options(exact, exact_o.model);
  exact->add_option("--text", exact_o.text, "Source text")->required();
  auto* marg_flag =
      exact->add_flag("--marginal", exact_o.marginal, "Marginal (default)");
  auto* mle_flag = exact->add_flag("--mle", exact_o.mle, "Most likely path");
  marg_flag->excludes(mle_flag);
  exact->add_option("--path-cap", exact_o.path_cap, "Maximum path count")
      ->capture_default_str();
  exact->add_flag("--json", exact_o.json, "JSON output");

  MleOptions mle_o;
  auto* mle = app.add_subcommand("mle", "Branch-and-bound most likely path");
  add_tables_options(mle, mle_o.tables);
  add_model_options(mle, mle_o.model);
  mle->add_option("--text", mle_o.text, "Source text")->required();
  mle->add_option("--budget", mle_o.budget, "Time budget in seconds")
      ->capture_default_str()
      ->check(CLI::NonNegativeNumber);
  mle->add_flag("--parallel", mle_o.parallel, "Search subtrees concurrently");
  mle->add_flag("--json", mle_o.json, "JSON output");
  mle->add_option("--out", mle_o.out, "Also write the JSON report here");

  MarginalCliOptions marg_o;
  auto* marg = app.add_subcommand("marginal", "Importance-sampled marginal");
  add_tables_options(marg, marg_o.tables);
  add_model_options(marg, marg_o.model);
  marg->add_option("--text", marg_o.text, "Source text")->required();
  marg->add_option("-n,--samples", marg_o.n, "Sample count")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  marg->add_option("--seed", marg_o.seed, "RNG seed")->required();
  marg->add_flag("--exclude-canonical", marg_o.exclude_canonical,
                 "Zero the weight of canonical samples");
  marg->add_option("--trace", marg_o.trace, "CSV of n, log_estimate, ess");
  marg->add_flag("--json", marg_o.json, "JSON output");

  HardnessOptions hard_o;
  auto* hard = app.add_subcommand("hardness", "Run a 3-SAT reduction");
  hard->add_option("--cnf", hard_o.cnf, "DIMACS CNF file")->required();
  hard->add_option("--theorem", hard_o.theorem, "1 (argmax) or 2 (marginal)")
      ->required()
      ->check(CLI::IsMember({1, 2}));
  hard->add_option("--path-cap", hard_o.path_cap, "Maximum path count")
      ->capture_default_str();
  hard->add_flag("--json", hard_o.json, "JSON output");

  QaCliOptions qa_o;
  auto* qa = app.add_subcommand("qa", "Multiple-choice QA evaluation");
  add_tables_options(qa, qa_o.tables);
  add_model_options(qa, qa_o.model);
  qa->add_option("--dataset", qa_o.dataset, "JSONL test set")->required();
  qa->add_option("--validation", qa_o.validation,
                 "JSONL set for tuning (default: the test set)");
  qa->add_option("--classifier", qa_o.classifier)
      ->check(CLI::IsMember({"canonical", "marginal", "mixture",
                             "noncanonical"}))
      ->capture_default_str();
  qa->add_option("-n,--samples", qa_o.n, "Samples per choice")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  qa->add_option("--alpha", qa_o.alpha, "Mixture weight")
      ->capture_default_str();
  qa->add_flag("--tune-k", qa_o.tune_k, "Tune the sample count");
  qa->add_flag("--tune-alpha", qa_o.tune_alpha, "Tune the mixture weight");
  qa->add_option("--pool", qa_o.pool, "Pool size for --tune-k")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  qa->add_option("--trials", qa_o.trials, "Trials per k for --tune-k")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  qa->add_option("--alpha-grid", qa_o.alpha_grid, "Points in the alpha grid")
      ->capture_default_str()
      ->check(CLI::Range(2, 100001));
  qa->add_option("--repeats", qa_o.repeats, "Independent seeded reruns")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  qa->add_option("--seed", qa_o.seed, "RNG seed (required when sampling)");
  qa->add_flag("--length-normalize", qa_o.length_normalize,
               "Per-token canonical scores (ablation)");
  qa->add_option("--out", qa_o.out, "Report JSON path (default: stdout)");
  qa->add_option("--csv", qa_o.csv, "Per-example CSV path");

  QaPlotOptions plot_o;
  auto* plot = app.add_subcommand("qa-plot", "Plot data from a QA report");
  plot->add_option("--report", plot_o.report, "Report JSON")->required();
  plot->add_option("--out", plot_o.out, "CSV path (default: stdout)");

  CanonicityOptions canon_o;
  auto* canon =
      app.add_subcommand("canonicity", "Canonicity rate of token sequences");
  add_tables_options(canon, canon_o.tables);
  canon->add_option("--samples", canon_o.samples,
                    "One token-id sequence per line")
      ->required();
  canon->add_flag("--json", canon_o.json, "JSON output");

  BridgeOptions bridge_o;
  auto* bridge =
      app.add_subcommand("bridge-check", "Probe a logits bridge server");
  bridge->add_option("--url", bridge_o.url,
                     std::string("Bridge URL (default: $") +
                         kBridgeUrlVariable + ")");
  bridge->add_option("--text", bridge_o.text, "Also request its encoding");
  bridge->add_flag("--json", bridge_o.json, "JSON output");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << deepest_parsed(app)->help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << deepest_parsed(app)->help();
    return kExitUsage;
  }

  set_thread_count(threads);
  try {
    if (mdd->parsed()) return run_mdd(mdd_o, out);
    if (exact->parsed()) return run_exact(exact_o, out);
    if (mle->parsed()) return run_mle(mle_o, out);
    if (marg->parsed()) return run_marginal(marg_o, out);
    if (hard->parsed()) return run_hardness(hard_o, out, err);
    if (qa->parsed()) return run_qa(qa_o, qa, out);
    if (plot->parsed()) return run_qa_plot(plot_o, out);
    if (canon->parsed()) return run_canonicity(canon_o, out, err);
    if (bridge->parsed()) return run_bridge_check(bridge_o, bridge, out);
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n\n" << e.app->help();
    return kExitUsage;
  } catch (const Error& e) {
    err << "error: " << kind_name(e.kind()) << ": " << e.what() << '\n';
    return kExitDomain;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitDomain;
  }
  err << app.help();
  return kExitUsage;
}

int dispatch(int argc, const char* const* argv) {
  return dispatch(argc, argv, std::cout, std::cerr);
}

}  // namespace tokspace
