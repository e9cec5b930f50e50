#include "tokspace/bpe.hpp"

#include <algorithm>
#include <limits>

#include "tokspace/error.hpp"
#include "tokspace/rng.hpp"

namespace tokspace {
namespace {

std::size_t utf8_length(unsigned char lead) {
  if (lead < 0x80) return 1;
  if ((lead >> 5) == 0x6) return 2;
  if ((lead >> 4) == 0xE) return 3;
  if ((lead >> 3) == 0x1E) return 4;
  return 1;
}

TokenIds atomic_split(std::string_view text, const Vocabulary& vocab) {
  TokenIds symbols;
  symbols.reserve(text.size());
  for (std::size_t pos = 0; pos < text.size();) {
    const std::size_t len = std::min(
        utf8_length(static_cast<unsigned char>(text[pos])), text.size() - pos);
    const auto ch = text.substr(pos, len);
    if (auto id = vocab.find(ch); id && !vocab.is_special(*id)) {
      symbols.push_back(*id);
    } else if (vocab.byte_fallback()) {
      for (unsigned char b : ch) symbols.push_back(*vocab.byte_token(b));
    } else {
      throw UnspellableCharacter(pos);
    }
    pos += len;
  }
  return symbols;
}

void merge_at(TokenIds& symbols, std::size_t i, TokenId merged) {
  symbols[i] = merged;
  symbols.erase(symbols.begin() + static_cast<std::ptrdiff_t>(i) + 1);
}

}  // namespace

Tokenization canonical_encode(std::string_view text, const Vocabulary& vocab,
                              const MergeTable& merges) {
  TokenIds symbols = atomic_split(text, vocab);
  for (;;) {
    std::uint32_t best_rank = std::numeric_limits<std::uint32_t>::max();
    std::size_t best_pos = 0;
    TokenId best_merged = -1;
    for (std::size_t i = 0; i + 1 < symbols.size(); ++i) {
      if (auto hit = merges.lookup(symbols[i], symbols[i + 1]);
          hit && hit->rank < best_rank) {
        best_rank = hit->rank;
        best_pos = i;
        best_merged = hit->merged;
      }
    }
    if (best_merged < 0) break;
    merge_at(symbols, best_pos, best_merged);
  }
  return {std::move(symbols), std::string(text), true};
}

Tokenization dropout_encode(std::string_view text, const Vocabulary& vocab,
                            const MergeTable& merges, double p_drop,
                            std::uint64_t seed) {
  if (!(p_drop >= 0.0 && p_drop <= 1.0)) {
    throw Error(Error::Kind::InvalidArgument, "p_drop must lie in [0, 1]");
  }
  TokenIds symbols = atomic_split(text, vocab);
  CounterRng rng(seed, 0);
  for (;;) {
    std::uint32_t best_rank = std::numeric_limits<std::uint32_t>::max();
    std::size_t best_pos = 0;
    TokenId best_merged = -1;
    for (std::size_t i = 0; i + 1 < symbols.size(); ++i) {
      auto hit = merges.lookup(symbols[i], symbols[i + 1]);
      if (!hit) continue;
      if (p_drop > 0.0 && rng.uniform() < p_drop) continue;
      if (hit->rank < best_rank) {
        best_rank = hit->rank;
        best_pos = i;
        best_merged = hit->merged;
      }
    }
    if (best_merged < 0) break;
    merge_at(symbols, best_pos, best_merged);
  }
  Tokenization out{std::move(symbols), std::string(text), false};
  out.is_canonical =
      out.ids == canonical_encode(text, vocab, merges).ids;
  return out;
}

std::string decode(std::span<const TokenId> ids, const Vocabulary& vocab) {
  std::string out;
  for (TokenId id : ids) {
    const std::string& tok = vocab.token(id);
    if (auto b = vocab.byte_value(id)) {
      out += static_cast<char>(*b);
    } else if (!vocab.is_special(id)) {
      out += tok;
    }
  }
  return out;
}

bool is_canonical(std::span<const TokenId> ids, const Vocabulary& vocab,
                  const MergeTable& merges) {
  const std::string text = decode(ids, vocab);
  const auto canonical = canonical_encode(text, vocab, merges);
  return std::equal(ids.begin(), ids.end(), canonical.ids.begin(),
                    canonical.ids.end());
}

}  // namespace tokspace
