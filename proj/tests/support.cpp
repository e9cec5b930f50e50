#include "support.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <set>

#include "tokspace/error.hpp"

namespace tokspace::testing {

std::string fixture(const std::string& name) {
  return std::string(TOKSPACE_FIXTURES) + "/" + name;
}

const BpeTables& llama2() {
  static const BpeTables tables = load_tables(fixture("llama2.json"));
  return tables;
}

const BpeTables& bird() {
  static const BpeTables tables = load_tables(fixture("bird.json"));
  return tables;
}

TokenIds ids_of(const std::vector<std::string>& tokens,
                const Vocabulary& vocab) {
  TokenIds ids;
  for (const auto& t : tokens) {
    auto id = vocab.find(t);
    if (!id) throw std::runtime_error("token not in vocabulary: " + t);
    ids.push_back(*id);
  }
  return ids;
}

std::vector<std::string> strings_of(const TokenIds& ids,
                                    const Vocabulary& vocab) {
  std::vector<std::string> out;
  for (TokenId id : ids) out.push_back(vocab.token(id));
  return out;
}

std::vector<std::vector<std::string>> naive_splits(
    std::string_view text, const std::vector<std::string>& tokens) {
  if (text.empty()) return {{}};
  std::vector<std::vector<std::string>> out;
  for (const auto& t : tokens) {
    if (t.empty() || text.substr(0, t.size()) != t) continue;
    for (auto rest : naive_splits(text.substr(t.size()), tokens)) {
      rest.insert(rest.begin(), t);
      out.push_back(std::move(rest));
    }
  }
  return out;
}

namespace {

std::vector<std::string> chars_of(std::string_view text) {
  std::vector<std::string> out;
  for (char c : text) out.emplace_back(1, c);
  return out;
}

int rank_of(const std::vector<std::pair<std::string, std::string>>& merges,
            const std::string& l, const std::string& r) {
  for (std::size_t i = 0; i < merges.size(); ++i) {
    if (merges[i].first == l && merges[i].second == r) {
      return static_cast<int>(i);
    }
  }
  return -1;
}

}  // namespace

std::vector<std::string> reference_bpe(
    std::string_view text,
    const std::vector<std::pair<std::string, std::string>>& merges) {
  auto symbols = chars_of(text);
  for (;;) {
    int best_rank = -1;
    std::size_t best_pos = 0;
    for (std::size_t i = 0; i + 1 < symbols.size(); ++i) {
      const int r = rank_of(merges, symbols[i], symbols[i + 1]);
      if (r >= 0 && (best_rank < 0 || r < best_rank)) {
        best_rank = r;
        best_pos = i;
      }
    }
    if (best_rank < 0) return symbols;
    symbols[best_pos] += symbols[best_pos + 1];
    symbols.erase(symbols.begin() + static_cast<long>(best_pos) + 1);
  }
}

std::map<std::vector<std::string>, double> dropout_distribution(
    std::string_view text,
    const std::vector<std::pair<std::string, std::string>>& merges,
    double p_drop) {
  std::map<std::vector<std::string>, double> out;
  std::function<void(std::vector<std::string>, double)> walk =
      [&](std::vector<std::string> symbols, double mass) {
        std::vector<std::pair<std::size_t, int>> candidates;
        for (std::size_t i = 0; i + 1 < symbols.size(); ++i) {
          const int r = rank_of(merges, symbols[i], symbols[i + 1]);
          if (r >= 0) candidates.emplace_back(i, r);
        }
        const std::size_t m = candidates.size();
        for (std::uint64_t keep = 0; keep < (1ULL << m); ++keep) {
          double p = mass;
          int best_rank = -1;
          std::size_t best_pos = 0;
          for (std::size_t j = 0; j < m; ++j) {
            if (keep >> j & 1) {
              p *= 1.0 - p_drop;
              if (best_rank < 0 || candidates[j].second < best_rank) {
                best_rank = candidates[j].second;
                best_pos = candidates[j].first;
              }
            } else {
              p *= p_drop;
            }
          }
          if (p == 0.0) continue;
          if (best_rank < 0) {
            out[symbols] += p;
            continue;
          }
          auto next = symbols;
          next[best_pos] += next[best_pos + 1];
          next.erase(next.begin() + static_cast<long>(best_pos) + 1);
          walk(std::move(next), p);
        }
      };
  walk(chars_of(text), 1.0);
  return out;
}

RandomInstance random_instance(std::mt19937_64& rng, std::size_t max_vocab,
                               std::size_t max_text, int letters,
                               std::size_t max_token_length) {
  RandomInstance inst;
  std::vector<std::string> tokens;
  for (int i = 0; i < letters; ++i) tokens.emplace_back(1, char('a' + i));
  std::set<std::string> seen(tokens.begin(), tokens.end());
  std::uniform_int_distribution<std::size_t> vocab_size(tokens.size(),
                                                        max_vocab);
  const std::size_t target = vocab_size(rng);
  for (int attempts = 0; tokens.size() < target && attempts < 1000;
       ++attempts) {
    std::uniform_int_distribution<std::size_t> pick(0, tokens.size() - 1);
    const std::string l = tokens[pick(rng)];
    const std::string r = tokens[pick(rng)];
    const std::string merged = l + r;
    if (merged.size() > max_token_length || seen.count(merged)) continue;
    seen.insert(merged);
    tokens.push_back(merged);
    inst.merge_strings.emplace_back(l, r);
  }
  std::vector<MergeRule> rules;
  Vocabulary vocab(tokens);
  for (const auto& [l, r] : inst.merge_strings) {
    rules.push_back({*vocab.find(l), *vocab.find(r), *vocab.find(l + r)});
  }
  MergeTable merges(vocab, std::move(rules));
  inst.tables = BpeTables{std::move(vocab), std::move(merges)};
  std::uniform_int_distribution<std::size_t> length(1, max_text);
  std::uniform_int_distribution<int> letter(0, letters - 1);
  const std::size_t n = length(rng);
  for (std::size_t i = 0; i < n; ++i) inst.text += char('a' + letter(rng));
  return inst;
}

CnfFormula random_cnf(std::mt19937_64& rng, int n_vars, int n_clauses) {
  CnfFormula cnf;
  cnf.n_vars = n_vars;
  std::uniform_int_distribution<int> width(1, std::min(3, n_vars));
  std::bernoulli_distribution sign(0.5);
  for (int k = 0; k < n_clauses; ++k) {
    std::vector<int> vars(n_vars);
    for (int i = 0; i < n_vars; ++i) vars[i] = i + 1;
    std::shuffle(vars.begin(), vars.end(), rng);
    std::vector<Literal> clause;
    const int w = width(rng);
    for (int i = 0; i < w; ++i) clause.push_back({vars[i], sign(rng)});
    cnf.clauses.push_back(std::move(clause));
  }
  return cnf;
}

std::vector<CnfFormula> all_cnfs(int n_vars, int max_clauses) {
  // Each variable is absent, positive or negative in a clause.
  std::vector<std::vector<Literal>> clauses;
  int states = 1;
  for (int i = 0; i < n_vars; ++i) states *= 3;
  for (int code = 1; code < states; ++code) {
    std::vector<Literal> clause;
    int c = code;
    for (int v = 1; v <= n_vars; ++v, c /= 3) {
      if (c % 3 == 1) clause.push_back({v, true});
      if (c % 3 == 2) clause.push_back({v, false});
    }
    if (clause.size() <= 3) clauses.push_back(std::move(clause));
  }
  std::vector<CnfFormula> out;
  std::vector<std::size_t> pick;
  std::function<void(std::size_t)> extend = [&](std::size_t from) {
    if (!pick.empty()) {
      CnfFormula cnf;
      cnf.n_vars = n_vars;
      for (std::size_t i : pick) cnf.clauses.push_back(clauses[i]);
      out.push_back(std::move(cnf));
    }
    if (static_cast<int>(pick.size()) == max_clauses) return;
    for (std::size_t i = from; i < clauses.size(); ++i) {
      pick.push_back(i);
      extend(i);
      pick.pop_back();
    }
  };
  extend(0);
  return out;
}

std::uint64_t count_models(const CnfFormula& cnf) {
  std::uint64_t count = 0;
  for (std::uint64_t a = 0; a < (1ULL << cnf.n_vars); ++a) {
    bool all = true;
    for (const auto& clause : cnf.clauses) {
      bool any = false;
      for (const auto& lit : clause) {
        const bool value = (a >> (lit.var - 1)) & 1;
        any = any || value == lit.positive;
      }
      all = all && any;
    }
    count += all;
  }
  return count;
}

LogProb proposal_oracle(const ScoringModel& model,
                        const std::vector<TokenIds>& paths,
                        const TokenIds& path) {
  LogProb total = 0.0;
  for (std::size_t j = 0; j < path.size(); ++j) {
    std::set<TokenId> mask;
    for (const auto& p : paths) {
      if (p.size() > j &&
          std::equal(path.begin(), path.begin() + j, p.begin())) {
        mask.insert(p[j]);
      }
    }
    const TokenIds cands(mask.begin(), mask.end());
    const TokenIds prefix(path.begin(), path.begin() + j);
    const auto lps = model.next_logprobs(prefix, cands);
    const auto it = std::find(cands.begin(), cands.end(), path[j]);
    double z = 0.0;
    for (double lp : lps) z += std::exp(lp);
    total += lps[it - cands.begin()] - std::log(z);
  }
  return total;
}

}  // namespace tokspace::testing
