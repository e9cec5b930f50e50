#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

#include "tokspace/types.hpp"
#include "tokspace/vocab.hpp"

namespace tokspace {

using BigCount = boost::multiprecision::cpp_int;

using NodeIndex = std::uint32_t;

struct MddEdge {
  TokenId token;
  NodeIndex target;
};

// Decision diagram of every tokenization of one string. Nodes are the byte
// positions that lie on some root-to-terminal path, in increasing order, so
// node 0 is the root and the last node is the terminal. Outgoing edges are
// sorted by token id.
class Mdd {
 public:
  const std::string& text() const { return text_; }
  std::size_t node_count() const { return positions_.size(); }
  std::size_t edge_count() const { return edges_.size(); }
  NodeIndex root() const { return 0; }
  NodeIndex terminal() const {
    return static_cast<NodeIndex>(positions_.size() - 1);
  }
  bool is_terminal(NodeIndex n) const { return n == terminal(); }

  std::size_t position(NodeIndex n) const { return positions_.at(n); }
  std::optional<NodeIndex> node_at(std::size_t position) const;

  std::span<const MddEdge> edges(NodeIndex n) const {
    return {edges_.data() + offsets_[n], edges_.data() + offsets_[n + 1]};
  }

 private:
  friend Mdd compile_mdd(std::string_view text, const Vocabulary& vocab);

  std::string text_;
  std::vector<std::size_t> positions_;
  std::vector<std::size_t> offsets_;
  std::vector<MddEdge> edges_;
};

// Edge (i, t, j) exists iff text[i..j) spells t. Dead ends are trimmed.
// The empty string compiles to a single root==terminal node.
// Throws Error(NoTokenization) when the terminal is unreachable.
Mdd compile_mdd(std::string_view text, const Vocabulary& vocab);

// Paths from each node to the terminal; entry [root] is the total.
std::vector<BigCount> path_counts(const Mdd& mdd);
BigCount count_tokenizations(const Mdd& mdd);

// Visits tokenizations in lexicographic token-id order until fn returns
// false or `limit` paths have been produced.
void enumerate_paths(const Mdd& mdd, std::optional<std::uint64_t> limit,
                     const std::function<bool(const TokenIds&)>& fn);
std::vector<TokenIds> enumerate_paths(
    const Mdd& mdd, std::optional<std::uint64_t> limit = std::nullopt);

// Labels of the outgoing edges at a byte position. Every edge in a trimmed
// diagram reaches the terminal, so this is the look-ahead support mask.
// Throws Error(InvalidPosition) when no node sits at that position.
TokenIds valid_next_tokens(const Mdd& mdd, std::size_t position);

// Walks ids through the diagram; nullopt when ids is not a path.
std::optional<std::vector<NodeIndex>> trace_path(const Mdd& mdd,
                                                 std::span<const TokenId> ids);

// Graphviz text: node = byte position, edge label = token string.
std::string to_dot(const Mdd& mdd, const Vocabulary& vocab);

}  // namespace tokspace
