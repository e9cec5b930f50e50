#include "tokspace/bnb.hpp"

#include <algorithm>
#include <atomic>
#include <mutex>
#include <numeric>

#include "tokspace/error.hpp"
#include "tokspace/parallel.hpp"

namespace tokspace {
namespace {

using Clock = std::chrono::steady_clock;

// State shared by every search worker. In serial mode there is exactly one
// worker and the atomics are uncontended.
struct Shared {
  const ScoringModel& model;
  const Mdd& mdd;
  const SearchOptions& options;
  Clock::time_point deadline;

  std::atomic<double> incumbent{kLogZero};
  std::mutex best_mutex{};
  TokenIds best_ids{};
  std::vector<IncumbentUpdate> trace{};
  std::vector<TokenIds> pruned_prefixes{};

  std::atomic<std::uint64_t> expanded{0};
  std::atomic<std::uint64_t> pruned{0};
  std::atomic<bool> timed_out{false};

  void offer(const TokenIds& path, LogProb lp) {
    std::lock_guard lock(best_mutex);
    if (lp > incumbent.load()) {
      incumbent.store(lp);
      best_ids = path;
      trace.push_back({expanded.load(), lp});
    }
  }
};

class Worker {
 public:
  Worker(Shared& shared, TokenIds path, LogProb partial)
      : s_(shared), path_(std::move(path)), start_partial_(partial) {
    prefix_ = s_.options.context.prefix;
    prefix_.insert(prefix_.end(), path_.begin(), path_.end());
  }

  void run(NodeIndex start) { visit(start, start_partial_, true); }

 private:
  void visit(NodeIndex node, LogProb partial, bool is_start) {
    if (s_.timed_out.load(std::memory_order_relaxed)) return;
    if (s_.mdd.is_terminal(node)) {
      s_.offer(path_,
               partial + eos_logprob(s_.model, prefix_, s_.options.context.eos));
      return;
    }
    if (!is_start || !path_.empty()) {
      if (partial <= s_.incumbent.load()) {
        s_.pruned.fetch_add(1, std::memory_order_relaxed);
        if (s_.options.record_pruned) {
          std::lock_guard lock(s_.best_mutex);
          s_.pruned_prefixes.push_back(path_);
        }
        return;
      }
    }
    s_.expanded.fetch_add(1, std::memory_order_relaxed);
    if (Clock::now() >= s_.deadline) {
      s_.timed_out.store(true);
      return;
    }

    const auto edges = s_.mdd.edges(node);
    TokenIds candidates;
    for (const auto& e : edges) candidates.push_back(e.token);
    const auto lps = s_.model.next_logprobs(prefix_, candidates);
    std::vector<std::size_t> order(edges.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return lps[a] > lps[b]; });
    for (std::size_t i : order) {
      path_.push_back(edges[i].token);
      prefix_.push_back(edges[i].token);
      visit(edges[i].target, partial + lps[i], false);
      path_.pop_back();
      prefix_.pop_back();
      if (s_.timed_out.load(std::memory_order_relaxed)) return;
    }
  }

  Shared& s_;
  TokenIds path_;
  TokenIds prefix_;
  LogProb start_partial_;
};

}  // namespace

SearchReport branch_and_bound(const ScoringModel& model, const Mdd& mdd,
                              const Tokenization& canonical,
                              const SearchOptions& options) {
  if (!trace_path(mdd, canonical.ids)) {
    throw Error(Error::Kind::CanonicalMismatch,
                "canonical tokenization is not a path of the diagram for \"" +
                    mdd.text() + "\"");
  }
  const auto started = Clock::now();
  const LogProb canonical_lp =
      score_sequence(model, canonical.ids, options.context).total_logprob;

  Shared shared{model, mdd, options,
                started + std::chrono::duration_cast<Clock::duration>(
                              options.budget)};
  shared.incumbent.store(canonical_lp);
  shared.best_ids = canonical.ids;

  if (!options.parallel || mdd.is_terminal(mdd.root())) {
    Worker(shared, {}, 0.0).run(mdd.root());
  } else {
    // Expand the root here, then hand each child subtree to a worker.
    shared.expanded.fetch_add(1);
    const auto edges = mdd.edges(mdd.root());
    TokenIds candidates;
    for (const auto& e : edges) candidates.push_back(e.token);
    const auto lps = model.next_logprobs(options.context.prefix, candidates);
    parallel_for(edges.size(), [&](std::size_t i) {
      Worker(shared, {edges[i].token}, lps[i]).run(edges[i].target);
    });
  }

  SearchReport report;
  report.best = {shared.best_ids, mdd.text(), shared.best_ids == canonical.ids};
  report.best_logprob = shared.incumbent.load();
  report.canonical_logprob = canonical_lp;
  report.nodes_expanded = shared.expanded.load();
  report.pruned = shared.pruned.load();
  report.timed_out = shared.timed_out.load();
  report.elapsed = Clock::now() - started;
  report.improved_over_canonical = report.best_logprob > canonical_lp;
  report.trace = std::move(shared.trace);
  report.pruned_prefixes = std::move(shared.pruned_prefixes);
  return report;
}

}  // namespace tokspace
