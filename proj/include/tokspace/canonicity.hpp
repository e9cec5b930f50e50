#pragma once

#include <cstddef>
#include <filesystem>
#include <istream>
#include <span>
#include <string>
#include <vector>

#include "tokspace/vocab.hpp"

namespace tokspace {

struct CanonicityRow {
  std::size_t length;
  std::size_t sequences;  // sequences with at least `length` tokens
  std::size_t canonical;  // of those, with a canonical first `length` tokens
  double rate;
};

struct CanonicityTable {
  std::vector<CanonicityRow> rows;  // length 1, 2, ...
  std::size_t sequences = 0;
  std::size_t skipped = 0;  // lines that failed to parse or decode
  std::vector<std::string> warnings;
};

// Length of the longest canonical prefix: the largest l such that the first
// l tokens are the canonical encoding of their own decoded text.
std::size_t canonical_prefix_length(std::span<const TokenId> ids,
                                    const Vocabulary& vocab,
                                    const MergeTable& merges);

// One sequence per line, either a JSON array of ids or whitespace/comma
// separated ids. Blank lines and lines starting with '#' are ignored. BOS and
// EOS ids are stripped from the ends before analysis.
CanonicityTable canonicity_rate(std::istream& in, const Vocabulary& vocab,
                                const MergeTable& merges);
CanonicityTable canonicity_rate(const std::filesystem::path& path,
                                const Vocabulary& vocab,
                                const MergeTable& merges);
CanonicityTable canonicity_rate(std::span<const TokenIds> sequences,
                                const Vocabulary& vocab,
                                const MergeTable& merges);

}  // namespace tokspace
