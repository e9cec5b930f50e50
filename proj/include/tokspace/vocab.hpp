#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "tokspace/types.hpp"

namespace tokspace {

// Byte-level prefix index over the literal (non-special) tokens.
class TokenTrie {
 public:
  void insert(std::string_view token, TokenId id);

  // Calls fn(id, length) for every token that is a prefix of text[pos..),
  // shortest first.
  template <typename Fn>
  void for_each_prefix(std::string_view text, std::size_t pos, Fn&& fn) const {
    std::uint32_t node = 0;
    for (std::size_t i = pos; i < text.size(); ++i) {
      auto it = edges_.find(key(node, static_cast<unsigned char>(text[i])));
      if (it == edges_.end()) return;
      node = it->second;
      if (terminal_[node] >= 0) fn(terminal_[node], i + 1 - pos);
    }
  }

 private:
  static std::uint64_t key(std::uint32_t node, unsigned char byte) {
    return (static_cast<std::uint64_t>(node) << 8) | byte;
  }

  std::unordered_map<std::uint64_t, std::uint32_t> edges_;
  std::vector<TokenId> terminal_{-1};
};

// Dense id <-> string bijection. Tokens of the form <0xHH> are byte tokens;
// they and any declared special tokens never match text literally.
class Vocabulary {
 public:
  Vocabulary() = default;
  explicit Vocabulary(std::vector<std::string> tokens_by_id,
                      std::vector<std::string> special_tokens = {},
                      std::optional<bool> byte_fallback = std::nullopt);

  std::size_t size() const { return by_id_.size(); }
  bool contains(TokenId id) const {
    return id >= 0 && static_cast<std::size_t>(id) < by_id_.size();
  }
  std::optional<TokenId> find(std::string_view token) const;
  // Throws Error(UnknownTokenId).
  const std::string& token(TokenId id) const;

  bool byte_fallback() const { return byte_fallback_; }
  bool is_special(TokenId id) const { return special_.at(id); }
  // Decoded byte for a byte token.
  std::optional<unsigned char> byte_value(TokenId id) const;
  std::optional<TokenId> byte_token(unsigned char byte) const;

  std::optional<TokenId> bos() const { return bos_; }
  std::optional<TokenId> eos() const { return eos_; }

  const TokenTrie& trie() const { return trie_; }
  const std::vector<std::string>& tokens() const { return by_id_; }

  nlohmann::json to_json() const;

 private:
  std::vector<std::string> by_id_;
  std::unordered_map<std::string, TokenId> by_string_;
  std::vector<bool> special_;
  std::vector<std::int16_t> byte_of_;
  std::vector<TokenId> byte_tokens_;
  bool byte_fallback_ = false;
  std::optional<TokenId> bos_;
  std::optional<TokenId> eos_;
  TokenTrie trie_;
};

struct MergeRule {
  TokenId left;
  TokenId right;
  TokenId merged;
};

// Ordered merge rules; rank = position, lower rank merges first.
class MergeTable {
 public:
  MergeTable() = default;
  // Validates concatenation and membership against vocab.
  MergeTable(const Vocabulary& vocab, std::vector<MergeRule> rules);

  std::size_t size() const { return rules_.size(); }
  const std::vector<MergeRule>& rules() const { return rules_; }

  struct Hit {
    std::uint32_t rank;
    TokenId merged;
  };
  std::optional<Hit> lookup(TokenId left, TokenId right) const;

 private:
  static std::uint64_t key(TokenId l, TokenId r) {
    return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(l)) << 32) |
           static_cast<std::uint32_t>(r);
  }

  std::vector<MergeRule> rules_;
  std::unordered_map<std::uint64_t, std::uint32_t> rank_;
};

struct BpeTables {
  Vocabulary vocab;
  MergeTable merges;
};

// JSON with "vocab" (string -> id) and "merges" ("left right" strings or
// [left, right] pairs), optionally nested under "model". Optional keys:
// "special_tokens" (array of strings), "byte_fallback" (bool).
BpeTables parse_tables_json(const nlohmann::json& doc);

// Accepts a .json file, a vocab.txt (merges.txt read from the same directory
// when present), or a directory holding vocab.txt/merges.txt.
BpeTables load_tables(const std::filesystem::path& path);

nlohmann::json tables_to_json(const BpeTables& tables);

// Whole-string mode leaves text untouched. Metaspace replaces spaces with
// U+2581 and prefixes one unless the text already starts with a space.
enum class Pretokenizer { WholeString, Metaspace };

std::string pretokenize(std::string_view text, Pretokenizer mode);
// Inverse surface mapping: U+2581 back to a space.
std::string to_surface(std::string_view raw, Pretokenizer mode);

inline constexpr std::string_view kMetaspace = "\xE2\x96\x81";

}  // namespace tokspace
