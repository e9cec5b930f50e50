#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>

#include "tokspace/types.hpp"
#include "tokspace/vocab.hpp"

namespace tokspace {

struct Tokenization {
  TokenIds ids;
  std::string text;
  bool is_canonical = false;

  friend bool operator==(const Tokenization&, const Tokenization&) = default;
};

// Splits text into UTF-8 characters, then repeatedly applies the lowest-rank
// applicable merge (leftmost occurrence on ties) until none applies.
// Characters without a single-character token fall back to <0xHH> tokens when
// the vocabulary allows it; otherwise throws UnspellableCharacter.
Tokenization canonical_encode(std::string_view text, const Vocabulary& vocab,
                              const MergeTable& merges);

// BPE-dropout: each round, every applicable pair is skipped independently
// with probability p_drop; the lowest-rank survivor is applied, and encoding
// stops when a round has no survivor. Deterministic given seed.
Tokenization dropout_encode(std::string_view text, const Vocabulary& vocab,
                            const MergeTable& merges, double p_drop,
                            std::uint64_t seed);

// Raw concatenation; byte tokens contribute their byte, other special tokens
// contribute nothing. Throws UnknownTokenId.
std::string decode(std::span<const TokenId> ids, const Vocabulary& vocab);

bool is_canonical(std::span<const TokenId> ids, const Vocabulary& vocab,
                  const MergeTable& merges);

}  // namespace tokspace
