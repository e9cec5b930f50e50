#include "tokspace/mdd.hpp"

#include <algorithm>
#include <sstream>

#include "tokspace/error.hpp"

namespace tokspace {
namespace {

std::size_t utf8_length(unsigned char lead) {
  if (lead < 0x80) return 1;
  if ((lead >> 5) == 0x6) return 2;
  if ((lead >> 4) == 0xE) return 3;
  if ((lead >> 3) == 0x1E) return 4;
  return 1;
}

struct RawEdge {
  TokenId token;
  std::size_t target;
};

// Outgoing edges at every byte position, before trimming. Byte-fallback
// edges are added only for characters that have no single-character token,
// matching how the canonical encoder spells them.
std::vector<std::vector<RawEdge>> raw_edges(std::string_view text,
                                            const Vocabulary& vocab) {
  const std::size_t n = text.size();
  std::vector<std::vector<RawEdge>> out(n + 1);
  for (std::size_t i = 0; i < n; ++i) {
    vocab.trie().for_each_prefix(text, i, [&](TokenId id, std::size_t len) {
      out[i].push_back({id, i + len});
    });
  }
  if (!vocab.byte_fallback()) return out;
  for (std::size_t i = 0; i < n;) {
    const std::size_t len =
        std::min(utf8_length(static_cast<unsigned char>(text[i])), n - i);
    auto single = vocab.find(text.substr(i, len));
    if (!single || vocab.is_special(*single)) {
      for (std::size_t b = i; b < i + len; ++b) {
        out[b].push_back(
            {*vocab.byte_token(static_cast<unsigned char>(text[b])), b + 1});
      }
    }
    i += len;
  }
  return out;
}

}  // namespace

std::optional<NodeIndex> Mdd::node_at(std::size_t position) const {
  auto it = std::lower_bound(positions_.begin(), positions_.end(), position);
  if (it == positions_.end() || *it != position) return std::nullopt;
  return static_cast<NodeIndex>(it - positions_.begin());
}

Mdd compile_mdd(std::string_view text, const Vocabulary& vocab) {
  const std::size_t n = text.size();
  auto raw = raw_edges(text, vocab);

  // Suffix solvability, memoized on start position only.
  std::vector<char> alive(n + 1, 0);
  alive[n] = 1;
  for (std::size_t i = n; i-- > 0;) {
    for (const auto& e : raw[i]) {
      if (alive[e.target]) {
        alive[i] = 1;
        break;
      }
    }
  }
  if (!alive[0]) {
    throw Error(Error::Kind::NoTokenization,
                "string has no tokenization under this vocabulary");
  }

  std::vector<char> reached(n + 1, 0);
  reached[0] = 1;
  for (std::size_t i = 0; i < n; ++i) {
    if (!reached[i] || !alive[i]) continue;
    for (const auto& e : raw[i]) {
      if (alive[e.target]) reached[e.target] = 1;
    }
  }

  Mdd mdd;
  mdd.text_ = std::string(text);
  std::vector<NodeIndex> index(n + 1, 0);
  for (std::size_t i = 0; i <= n; ++i) {
    if (reached[i] && alive[i]) {
      index[i] = static_cast<NodeIndex>(mdd.positions_.size());
      mdd.positions_.push_back(i);
    }
  }
  mdd.offsets_.push_back(0);
  for (std::size_t pos : mdd.positions_) {
    std::vector<MddEdge> out;
    for (const auto& e : raw[pos]) {
      if (alive[e.target]) out.push_back({e.token, index[e.target]});
    }
    std::sort(out.begin(), out.end(),
              [](const MddEdge& a, const MddEdge& b) { return a.token < b.token; });
    mdd.edges_.insert(mdd.edges_.end(), out.begin(), out.end());
    mdd.offsets_.push_back(mdd.edges_.size());
  }
  return mdd;
}

std::vector<BigCount> path_counts(const Mdd& mdd) {
  std::vector<BigCount> counts(mdd.node_count());
  counts[mdd.terminal()] = 1;
  for (std::size_t n = mdd.node_count() - 1; n-- > 0;) {
    for (const auto& e : mdd.edges(static_cast<NodeIndex>(n))) {
      counts[n] += counts[e.target];
    }
  }
  return counts;
}

BigCount count_tokenizations(const Mdd& mdd) {
  return path_counts(mdd)[mdd.root()];
}

void enumerate_paths(const Mdd& mdd, std::optional<std::uint64_t> limit,
                     const std::function<bool(const TokenIds&)>& fn) {
  if (limit && *limit == 0) return;
  std::uint64_t produced = 0;
  TokenIds path;
  // Stack of (node, next edge offset).
  std::vector<std::pair<NodeIndex, std::size_t>> stack{{mdd.root(), 0}};
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (mdd.is_terminal(node)) {
      ++produced;
      if (!fn(path) || (limit && produced >= *limit)) return;
      stack.pop_back();
      if (!path.empty()) path.pop_back();
      continue;
    }
    const auto edges = mdd.edges(node);
    if (next == edges.size()) {
      stack.pop_back();
      if (!path.empty()) path.pop_back();
      continue;
    }
    const MddEdge e = edges[next++];
    path.push_back(e.token);
    stack.emplace_back(e.target, 0);
  }
}

std::vector<TokenIds> enumerate_paths(const Mdd& mdd,
                                      std::optional<std::uint64_t> limit) {
  std::vector<TokenIds> out;
  enumerate_paths(mdd, limit, [&](const TokenIds& p) {
    out.push_back(p);
    return true;
  });
  return out;
}

TokenIds valid_next_tokens(const Mdd& mdd, std::size_t position) {
  auto node = mdd.node_at(position);
  if (!node) {
    throw Error(Error::Kind::InvalidPosition,
                "no diagram node at byte position " + std::to_string(position));
  }
  TokenIds out;
  for (const auto& e : mdd.edges(*node)) out.push_back(e.token);
  return out;
}

std::optional<std::vector<NodeIndex>> trace_path(
    const Mdd& mdd, std::span<const TokenId> ids) {
  std::vector<NodeIndex> nodes{mdd.root()};
  for (TokenId id : ids) {
    const auto edges = mdd.edges(nodes.back());
    auto it = std::lower_bound(
        edges.begin(), edges.end(), id,
        [](const MddEdge& e, TokenId t) { return e.token < t; });
    if (it == edges.end() || it->token != id) return std::nullopt;
    nodes.push_back(it->target);
  }
  if (!mdd.is_terminal(nodes.back())) return std::nullopt;
  return nodes;
}

std::string to_dot(const Mdd& mdd, const Vocabulary& vocab) {
  auto escape = [](const std::string& s) {
    std::string out;
    for (char c : s) {
      if (c == '"' || c == '\\') out += '\\';
      out += c;
    }
    return out;
  };
  std::ostringstream out;
  out << "digraph mdd {\n  rankdir=LR;\n";
  for (NodeIndex n = 0; n < mdd.node_count(); ++n) {
    out << "  n" << mdd.position(n) << " [label=\"" << mdd.position(n)
        << "\"" << (mdd.is_terminal(n) ? ", shape=box" : ", shape=circle")
        << "];\n";
  }
  for (NodeIndex n = 0; n < mdd.node_count(); ++n) {
    for (const auto& e : mdd.edges(n)) {
      out << "  n" << mdd.position(n) << " -> n" << mdd.position(e.target)
          << " [label=\"" << escape(vocab.token(e.token)) << "\"];\n";
    }
  }
  out << "}\n";
  return out.str();
}

}  // namespace tokspace
