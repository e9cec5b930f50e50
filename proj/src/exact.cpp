#include "tokspace/exact.hpp"

#include <map>

#include "tokspace/error.hpp"
#include "tokspace/logspace.hpp"
#include "tokspace/parallel.hpp"

namespace tokspace {
namespace {

struct Subtree {
  TokenIds path;
  NodeIndex node;
  LogProb partial;
};

TokenIds edge_tokens(const Mdd& mdd, NodeIndex node) {
  TokenIds out;
  for (const auto& e : mdd.edges(node)) out.push_back(e.token);
  return out;
}

// Depth-first walk of every path below `start`, calling
// visit(path, logprob) in lexicographic order. One model query per internal
// node of the path tree.
template <typename Visit>
void walk_paths(const ScoringModel& model, const Mdd& mdd,
                const ScoringContext& context, const Subtree& start,
                Visit&& visit) {
  TokenIds prefix = context.prefix;
  prefix.insert(prefix.end(), start.path.begin(), start.path.end());
  TokenIds path = start.path;

  auto recurse = [&](auto&& self, NodeIndex node, LogProb partial) -> void {
    if (mdd.is_terminal(node)) {
      visit(path, partial + eos_logprob(model, prefix, context.eos));
      return;
    }
    const auto edges = mdd.edges(node);
    const auto lps = model.next_logprobs(prefix, edge_tokens(mdd, node));
    for (std::size_t i = 0; i < edges.size(); ++i) {
      prefix.push_back(edges[i].token);
      path.push_back(edges[i].token);
      self(self, edges[i].target, partial + lps[i]);
      prefix.pop_back();
      path.pop_back();
    }
  };
  recurse(recurse, start.node, start.partial);
}

// Expands the path tree breadth-first, keeping lexicographic order, until
// there are at least `target` subtrees or nothing is left to expand.
std::vector<Subtree> split_subtrees(const ScoringModel& model, const Mdd& mdd,
                                    const ScoringContext& context,
                                    std::size_t target) {
  std::vector<Subtree> frontier{{{}, mdd.root(), 0.0}};
  while (frontier.size() < target) {
    std::vector<Subtree> next;
    bool grew = false;
    for (auto& s : frontier) {
      if (mdd.is_terminal(s.node)) {
        next.push_back(std::move(s));
        continue;
      }
      TokenIds prefix = context.prefix;
      prefix.insert(prefix.end(), s.path.begin(), s.path.end());
      const auto edges = mdd.edges(s.node);
      const auto lps = model.next_logprobs(prefix, edge_tokens(mdd, s.node));
      for (std::size_t i = 0; i < edges.size(); ++i) {
        Subtree child{s.path, edges[i].target, s.partial + lps[i]};
        child.path.push_back(edges[i].token);
        next.push_back(std::move(child));
      }
      grew = true;
    }
    frontier.swap(next);
    if (!grew) break;
  }
  return frontier;
}

void check_cap(const Mdd& mdd, std::uint64_t cap) {
  const BigCount count = count_tokenizations(mdd);
  if (count > cap) {
    throw Error(Error::Kind::TooManyPaths,
                "diagram has " + count.str() + " paths (cap " +
                    std::to_string(cap) + ")");
  }
}

struct Best {
  TokenIds ids;
  LogProb logprob = kLogZero;
  bool found = false;

  void offer(const TokenIds& path, LogProb lp) {
    if (!found || lp > logprob) {
      ids = path;
      logprob = lp;
      found = true;
    }
  }
};

constexpr std::size_t kSubtreeTarget = 64;

ScoredTokenization finish(const Mdd& mdd, Best best) {
  return {{std::move(best.ids), mdd.text(), false}, best.logprob};
}

}  // namespace

LogProb exact_marginal_serial(const ScoringModel& model, const Mdd& mdd,
                              const ExactOptions& options) {
  check_cap(mdd, options.path_cap);
  LogSumExp acc;
  walk_paths(model, mdd, options.context, {{}, mdd.root(), 0.0},
             [&](const TokenIds&, LogProb lp) { acc.add(lp); });
  return acc.value();
}

LogProb exact_marginal(const ScoringModel& model, const Mdd& mdd,
                       const ExactOptions& options) {
  check_cap(mdd, options.path_cap);
  const auto subtrees =
      split_subtrees(model, mdd, options.context, kSubtreeTarget);
  std::vector<LogSumExp> partial(subtrees.size());
  parallel_for(subtrees.size(), [&](std::size_t i) {
    walk_paths(model, mdd, options.context, subtrees[i],
               [&](const TokenIds&, LogProb lp) { partial[i].add(lp); });
  });
  LogSumExp total;
  for (const auto& p : partial) total.merge(p);
  return total.value();
}

ScoredTokenization exact_most_likely_serial(const ScoringModel& model,
                                            const Mdd& mdd,
                                            const ExactOptions& options) {
  check_cap(mdd, options.path_cap);
  Best best;
  walk_paths(model, mdd, options.context, {{}, mdd.root(), 0.0},
             [&](const TokenIds& path, LogProb lp) { best.offer(path, lp); });
  return finish(mdd, std::move(best));
}

ScoredTokenization exact_most_likely(const ScoringModel& model, const Mdd& mdd,
                                     const ExactOptions& options) {
  check_cap(mdd, options.path_cap);
  const auto subtrees =
      split_subtrees(model, mdd, options.context, kSubtreeTarget);
  std::vector<Best> partial(subtrees.size());
  parallel_for(subtrees.size(), [&](std::size_t i) {
    walk_paths(model, mdd, options.context, subtrees[i],
               [&](const TokenIds& path, LogProb lp) {
                 partial[i].offer(path, lp);
               });
  });
  Best best;
  for (auto& p : partial) {
    if (p.found) best.offer(p.ids, p.logprob);
  }
  return finish(mdd, std::move(best));
}

ScoredTokenization viterbi_bigram(const ScoringModel& model, const Mdd& mdd,
                                  const ScoringContext& context) {
  const auto order = model.markov_order();
  if (!order || *order > 2) {
    throw Error(Error::Kind::ModelNotMarkov,
                "Viterbi needs a model of declared order <= 2, got " +
                    model.describe());
  }
  // State key: previous token, or -1 when nothing precedes the root.
  constexpr TokenId kNone = -1;
  const TokenId root_prev = context.prefix.empty() ? kNone : context.prefix.back();

  std::vector<std::vector<TokenId>> incoming(mdd.node_count());
  incoming[mdd.root()].push_back(root_prev);
  for (NodeIndex n = 0; n < mdd.node_count(); ++n) {
    for (const auto& e : mdd.edges(n)) incoming[e.target].push_back(e.token);
  }

  struct Cell {
    LogProb value = kLogZero;
    std::size_t choice = 0;
  };
  std::vector<std::map<TokenId, Cell>> table(mdd.node_count());
  auto prefix_for = [&](TokenId prev) {
    return prev == kNone ? TokenIds{} : TokenIds{prev};
  };

  for (std::size_t idx = mdd.node_count(); idx-- > 0;) {
    const auto n = static_cast<NodeIndex>(idx);
    for (TokenId prev : incoming[n]) {
      if (table[n].count(prev)) continue;
      Cell cell;
      if (mdd.is_terminal(n)) {
        cell.value = eos_logprob(model, prefix_for(prev), context.eos);
      } else {
        const auto edges = mdd.edges(n);
        const auto lps = model.next_logprobs(prefix_for(prev),
                                             edge_tokens(mdd, n));
        for (std::size_t i = 0; i < edges.size(); ++i) {
          const LogProb v =
              lps[i] + table[edges[i].target].at(edges[i].token).value;
          if (v > cell.value) {
            cell.value = v;
            cell.choice = i;
          }
        }
      }
      table[n].emplace(prev, cell);
    }
  }

  TokenIds ids;
  NodeIndex node = mdd.root();
  TokenId prev = root_prev;
  while (!mdd.is_terminal(node)) {
    const auto& e = mdd.edges(node)[table[node].at(prev).choice];
    ids.push_back(e.token);
    prev = e.token;
    node = e.target;
  }
  const LogProb lp = score_sequence(model, ids, context).total_logprob;
  return {{std::move(ids), mdd.text(), false}, lp};
}

}  // namespace tokspace
