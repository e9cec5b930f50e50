#include "tokspace/models.hpp"

#include <cmath>
#include <sstream>

#include <nlohmann/json.hpp>

#include "tokspace/error.hpp"
#include "tokspace/rng.hpp"

namespace tokspace {
namespace {

void check_ids(std::span<const TokenId> ids, std::size_t size) {
  for (TokenId id : ids) {
    if (id < 0 || static_cast<std::size_t>(id) >= size) {
      throw Error(Error::Kind::UnknownTokenId,
                  "token id " + std::to_string(id) + " outside model vocabulary");
    }
  }
}

std::vector<LogProb> select(const std::vector<LogProb>& full,
                            std::span<const TokenId> candidates) {
  std::vector<LogProb> out;
  out.reserve(candidates.size());
  for (TokenId c : candidates) out.push_back(full[static_cast<std::size_t>(c)]);
  return out;
}

}  // namespace

UniformModel::UniformModel(std::size_t vocab_size) : size_(vocab_size) {
  if (vocab_size == 0) {
    throw Error(Error::Kind::InvalidArgument, "uniform model needs |V| > 0");
  }
}

std::vector<LogProb> UniformModel::next_logprobs(
    std::span<const TokenId> prefix, std::span<const TokenId> candidates) const {
  check_ids(prefix, size_);
  check_ids(candidates, size_);
  return std::vector<LogProb>(candidates.size(),
                              -std::log(static_cast<double>(size_)));
}

std::string UniformModel::describe() const {
  return "uniform(|V|=" + std::to_string(size_) + ")";
}

NgramModel::NgramModel(int order, std::size_t vocab_size,
                       std::map<Context, std::vector<LogProb>> table)
    : order_(order),
      size_(vocab_size),
      table_(std::move(table)),
      uniform_(-std::log(static_cast<double>(vocab_size))) {
  if (order < 1 || order > 3) {
    throw Error(Error::Kind::InvalidArgument, "n-gram order must be 1..3");
  }
  for (const auto& [ctx, dist] : table_) {
    if (static_cast<int>(ctx.size()) > order - 1 || dist.size() != size_) {
      throw Error(Error::Kind::Format, "malformed n-gram table entry");
    }
    check_ids(ctx, size_);
  }
}

NgramModel NgramModel::from_corpus(int order, std::size_t vocab_size,
                                   std::span<const TokenIds> corpus,
                                   double add_k) {
  std::map<Context, std::vector<double>> counts;
  for (const auto& seq : corpus) {
    check_ids(seq, vocab_size);
    for (std::size_t i = 0; i < seq.size(); ++i) {
      const std::size_t width =
          std::min<std::size_t>(i, static_cast<std::size_t>(order - 1));
      Context ctx(seq.begin() + static_cast<std::ptrdiff_t>(i - width),
                  seq.begin() + static_cast<std::ptrdiff_t>(i));
      auto& row = counts[ctx];
      if (row.empty()) row.assign(vocab_size, 0.0);
      row[static_cast<std::size_t>(seq[i])] += 1.0;
    }
  }
  std::map<Context, std::vector<LogProb>> table;
  for (auto& [ctx, row] : counts) {
    double total = 0.0;
    for (double c : row) total += c;
    const double denom = total + add_k * static_cast<double>(vocab_size);
    std::vector<LogProb> dist(vocab_size);
    for (std::size_t v = 0; v < vocab_size; ++v) {
      dist[v] = std::log((row[v] + add_k) / denom);
    }
    table.emplace(ctx, std::move(dist));
  }
  return NgramModel(order, vocab_size, std::move(table));
}

NgramModel NgramModel::from_json(const nlohmann::json& doc) {
  const int order = doc.at("order").get<int>();
  const auto size = doc.at("vocab_size").get<std::size_t>();
  if (doc.contains("corpus")) {
    auto corpus = doc["corpus"].get<std::vector<TokenIds>>();
    return from_corpus(order, size, corpus, doc.value("add_k", 0.1));
  }
  std::map<Context, std::vector<LogProb>> table;
  for (const auto& row : doc.at("table")) {
    auto probs = row.at("probs").get<std::vector<double>>();
    double total = 0.0;
    for (double p : probs) {
      if (!(p > 0.0)) {
        throw Error(Error::Kind::Format,
                    "n-gram probabilities must be strictly positive");
      }
      total += p;
    }
    if (std::abs(total - 1.0) > 1e-9) {
      throw Error(Error::Kind::Format, "n-gram row does not sum to 1");
    }
    std::vector<LogProb> logs(probs.size());
    for (std::size_t i = 0; i < probs.size(); ++i) logs[i] = std::log(probs[i]);
    table.emplace(row.at("context").get<Context>(), std::move(logs));
  }
  return NgramModel(order, size, std::move(table));
}

const std::vector<LogProb>* NgramModel::lookup(
    std::span<const TokenId> prefix) const {
  const std::size_t width =
      std::min<std::size_t>(prefix.size(), static_cast<std::size_t>(order_ - 1));
  Context ctx(prefix.end() - static_cast<std::ptrdiff_t>(width), prefix.end());
  auto it = table_.find(ctx);
  return it == table_.end() ? nullptr : &it->second;
}

std::vector<LogProb> NgramModel::next_logprobs(
    std::span<const TokenId> prefix, std::span<const TokenId> candidates) const {
  check_ids(prefix, size_);
  check_ids(candidates, size_);
  const auto* row = lookup(prefix);
  if (!row) return std::vector<LogProb>(candidates.size(), uniform_);
  return select(*row, candidates);
}

std::vector<LogProb> NgramModel::full_logprobs(
    std::span<const TokenId> prefix) const {
  check_ids(prefix, size_);
  const auto* row = lookup(prefix);
  return row ? *row : std::vector<LogProb>(size_, uniform_);
}

std::string NgramModel::describe() const {
  std::ostringstream s;
  s << order_ << "-gram(|V|=" << size_ << ", contexts=" << table_.size() << ")";
  return s.str();
}

RandomTableModel::RandomTableModel(std::size_t vocab_size, std::uint64_t seed,
                                   double scale, std::optional<int> history)
    : size_(vocab_size), seed_(seed), scale_(scale), history_(history) {
  if (vocab_size == 0) {
    throw Error(Error::Kind::InvalidArgument, "random model needs |V| > 0");
  }
}

std::vector<LogProb> RandomTableModel::full_logprobs(
    std::span<const TokenId> prefix) const {
  check_ids(prefix, size_);
  std::size_t start = 0;
  if (history_ && prefix.size() > static_cast<std::size_t>(*history_)) {
    start = prefix.size() - static_cast<std::size_t>(*history_);
  }
  // Length is mixed in so that prefixes differing only by truncation differ.
  std::uint64_t key = derive_stream(seed_, prefix.size() - start);
  for (std::size_t i = start; i < prefix.size(); ++i) {
    key = derive_stream(key, static_cast<std::uint64_t>(prefix[i]) + 1);
  }
  CounterRng rng(seed_, key);
  std::vector<double> logits(size_);
  for (auto& l : logits) {
    // Box-Muller; 1 - u keeps the log argument in (0, 1].
    const double u1 = 1.0 - rng.uniform();
    const double u2 = rng.uniform();
    l = scale_ * std::sqrt(-2.0 * std::log(u1)) *
        std::cos(2.0 * 3.14159265358979323846 * u2);
  }
  return log_softmax(logits);
}

std::vector<LogProb> RandomTableModel::next_logprobs(
    std::span<const TokenId> prefix, std::span<const TokenId> candidates) const {
  check_ids(candidates, size_);
  return select(full_logprobs(prefix), candidates);
}

std::optional<int> RandomTableModel::markov_order() const {
  if (!history_) return std::nullopt;
  return *history_ + 1;
}

std::string RandomTableModel::describe() const {
  std::ostringstream s;
  s << "random(|V|=" << size_ << ", seed=" << seed_ << ", scale=" << scale_;
  if (history_) s << ", history=" << *history_;
  s << ")";
  return s.str();
}

}  // namespace tokspace
