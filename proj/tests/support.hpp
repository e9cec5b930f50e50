#pragma once

#include <cstdint>
#include <map>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "tokspace/hardness.hpp"
#include "tokspace/model.hpp"
#include "tokspace/types.hpp"
#include "tokspace/vocab.hpp"

namespace tokspace::testing {

std::string fixture(const std::string& name);

// Loaded once per process.
const BpeTables& llama2();
const BpeTables& bird();

TokenIds ids_of(const std::vector<std::string>& tokens, const Vocabulary& vocab);
std::vector<std::string> strings_of(const TokenIds& ids, const Vocabulary& vocab);

// Every split of text into vocabulary strings, by plain recursion.
std::vector<std::vector<std::string>> naive_splits(
    std::string_view text, const std::vector<std::string>& tokens);

// Textbook BPE over strings: apply the lowest-rank adjacent pair, leftmost
// first, until none applies.
std::vector<std::string> reference_bpe(
    std::string_view text,
    const std::vector<std::pair<std::string, std::string>>& merges);

// Exact output distribution of per-attempt BPE dropout, by enumerating every
// keep/drop pattern of every round.
std::map<std::vector<std::string>, double> dropout_distribution(
    std::string_view text,
    const std::vector<std::pair<std::string, std::string>>& merges,
    double p_drop);

struct RandomInstance {
  BpeTables tables;
  std::vector<std::pair<std::string, std::string>> merge_strings;
  std::string text;
};

// Alphabet {a, b, c} (or the first `letters` letters) plus random merges, up
// to max_vocab tokens of length <= max_token_length; text of 1..max_text
// characters.
RandomInstance random_instance(std::mt19937_64& rng, std::size_t max_vocab = 30,
                               std::size_t max_text = 12, int letters = 3,
                               std::size_t max_token_length = 4);

CnfFormula random_cnf(std::mt19937_64& rng, int n_vars, int n_clauses);

// Every formula over n_vars variables with 1..max_clauses clauses drawn as a
// multiset from all clauses of 1..3 literals on distinct variables.
std::vector<CnfFormula> all_cnfs(int n_vars, int max_clauses);

// Truth-table count, independent of the library's.
std::uint64_t count_models(const CnfFormula& cnf);

// Look-ahead proposal probability of a path, recomputed from the model and
// the full path list: the mask at step j is every token that extends the
// first j tokens to some path.
LogProb proposal_oracle(const ScoringModel& model,
                        const std::vector<TokenIds>& paths,
                        const TokenIds& path);

}  // namespace tokspace::testing
