#include "tokspace/vocab.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "tokspace/error.hpp"

namespace tokspace {
namespace {

using nlohmann::json;

const std::vector<std::string> kDefaultSpecials = {"<unk>", "<s>",   "</s>",
                                                   "<pad>", "<bos>", "<eos>"};

std::optional<unsigned char> parse_byte_token(std::string_view s) {
  if (s.size() != 6 || s.substr(0, 3) != "<0x" || s[5] != '>') {
    return std::nullopt;
  }
  unsigned value = 0;
  for (char c : s.substr(3, 2)) {
    value <<= 4;
    if (c >= '0' && c <= '9') {
      value |= c - '0';
    } else if (c >= 'A' && c <= 'F') {
      value |= c - 'A' + 10;
    } else if (c >= 'a' && c <= 'f') {
      value |= c - 'a' + 10;
    } else {
      return std::nullopt;
    }
  }
  return static_cast<unsigned char>(value);
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw Error(Error::Kind::Format, "cannot open " + path.string());
  }
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::string> read_lines(const std::filesystem::path& path) {
  std::vector<std::string> lines;
  std::istringstream in(read_file(path));
  for (std::string line; std::getline(in, line);) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(std::move(line));
  }
  return lines;
}

// "left right": tokens may themselves contain spaces, so try every split
// point and keep the one that names a valid rule.
MergeRule split_merge_line(const Vocabulary& vocab, std::string_view line) {
  for (std::size_t pos = line.find(' '); pos != std::string_view::npos;
       pos = line.find(' ', pos + 1)) {
    auto left = vocab.find(line.substr(0, pos));
    auto right = vocab.find(line.substr(pos + 1));
    if (!left || !right) continue;
    std::string merged(line.substr(0, pos));
    merged += line.substr(pos + 1);
    if (auto m = vocab.find(merged)) return {*left, *right, *m};
  }
  throw Error(Error::Kind::Format,
              "merge rule does not name vocabulary tokens: " +
                  std::string(line));
}

MergeRule pair_to_rule(const Vocabulary& vocab, const std::string& l,
                       const std::string& r) {
  auto left = vocab.find(l);
  auto right = vocab.find(r);
  auto merged = vocab.find(l + r);
  if (!left || !right || !merged) {
    throw Error(Error::Kind::Format,
                "merge rule does not name vocabulary tokens: " + l + " " + r);
  }
  return {*left, *right, *merged};
}

}  // namespace

void TokenTrie::insert(std::string_view token, TokenId id) {
  std::uint32_t node = 0;
  for (unsigned char c : token) {
    auto [it, inserted] = edges_.try_emplace(
        key(node, c), static_cast<std::uint32_t>(terminal_.size()));
    if (inserted) terminal_.push_back(-1);
    node = it->second;
  }
  terminal_[node] = id;
}

Vocabulary::Vocabulary(std::vector<std::string> tokens_by_id,
                       std::vector<std::string> special_tokens,
                       std::optional<bool> byte_fallback)
    : by_id_(std::move(tokens_by_id)),
      special_(by_id_.size(), false),
      byte_of_(by_id_.size(), -1),
      byte_tokens_(256, -1) {
  for (const auto& s : kDefaultSpecials) special_tokens.push_back(s);
  std::sort(special_tokens.begin(), special_tokens.end());

  for (std::size_t i = 0; i < by_id_.size(); ++i) {
    const auto id = static_cast<TokenId>(i);
    const std::string& tok = by_id_[i];
    if (tok.empty()) {
      throw Error(Error::Kind::Format,
                  "empty token string at id " + std::to_string(i));
    }
    if (!by_string_.emplace(tok, id).second) {
      throw Error(Error::Kind::Format, "duplicate token string: " + tok);
    }
    if (auto b = parse_byte_token(tok)) {
      special_[i] = true;
      byte_of_[i] = *b;
      byte_tokens_[*b] = id;
      continue;
    }
    if (std::binary_search(special_tokens.begin(), special_tokens.end(),
                           tok)) {
      special_[i] = true;
      if (tok == "<s>" || tok == "<bos>") bos_ = id;
      if (tok == "</s>" || tok == "<eos>") eos_ = id;
      continue;
    }
    trie_.insert(tok, id);
  }

  const bool all_bytes = std::all_of(byte_tokens_.begin(), byte_tokens_.end(),
                                     [](TokenId t) { return t >= 0; });
  if (byte_fallback.value_or(false) && !all_bytes) {
    throw Error(Error::Kind::Format,
                "byte_fallback requested but <0x00>..<0xFF> are not all "
                "present");
  }
  byte_fallback_ = byte_fallback.value_or(all_bytes);
}

std::optional<TokenId> Vocabulary::find(std::string_view token) const {
  auto it = by_string_.find(std::string(token));
  if (it == by_string_.end()) return std::nullopt;
  return it->second;
}

const std::string& Vocabulary::token(TokenId id) const {
  if (!contains(id)) {
    throw Error(Error::Kind::UnknownTokenId,
                "unknown token id " + std::to_string(id));
  }
  return by_id_[static_cast<std::size_t>(id)];
}

std::optional<unsigned char> Vocabulary::byte_value(TokenId id) const {
  if (!contains(id) || byte_of_[id] < 0) return std::nullopt;
  return static_cast<unsigned char>(byte_of_[id]);
}

std::optional<TokenId> Vocabulary::byte_token(unsigned char byte) const {
  if (byte_tokens_[byte] < 0) return std::nullopt;
  return byte_tokens_[byte];
}

json Vocabulary::to_json() const {
  json vocab = json::object();
  for (std::size_t i = 0; i < by_id_.size(); ++i) vocab[by_id_[i]] = i;
  return vocab;
}

MergeTable::MergeTable(const Vocabulary& vocab, std::vector<MergeRule> rules)
    : rules_(std::move(rules)) {
  for (std::size_t rank = 0; rank < rules_.size(); ++rank) {
    const auto& r = rules_[rank];
    if (vocab.token(r.left) + vocab.token(r.right) != vocab.token(r.merged)) {
      throw Error(Error::Kind::Format,
                  "merge rule " + std::to_string(rank) +
                      " does not concatenate to its merged token");
    }
    // A repeated pair keeps its first (highest-priority) rank.
    rank_.try_emplace(key(r.left, r.right), static_cast<std::uint32_t>(rank));
  }
}

std::optional<MergeTable::Hit> MergeTable::lookup(TokenId left,
                                                  TokenId right) const {
  auto it = rank_.find(key(left, right));
  if (it == rank_.end()) return std::nullopt;
  return Hit{it->second, rules_[it->second].merged};
}

BpeTables parse_tables_json(const json& doc) {
  const json& body =
      doc.contains("model") && doc["model"].is_object() ? doc["model"] : doc;
  if (!body.contains("vocab") || !body["vocab"].is_object()) {
    throw Error(Error::Kind::Format, "vocabulary JSON lacks a \"vocab\" map");
  }
  const json& vocab_map = body["vocab"];
  std::vector<std::string> by_id(vocab_map.size());
  std::vector<bool> seen(vocab_map.size(), false);
  for (auto it = vocab_map.begin(); it != vocab_map.end(); ++it) {
    const auto id = it.value().get<long long>();
    if (id < 0 || static_cast<std::size_t>(id) >= by_id.size() || seen[id]) {
      throw Error(Error::Kind::Format,
                  "token ids must be a dense bijection onto 0..N-1 (bad id " +
                      std::to_string(id) + ")");
    }
    seen[id] = true;
    by_id[id] = it.key();
  }

  std::vector<std::string> specials;
  if (doc.contains("special_tokens")) {
    specials = doc["special_tokens"].get<std::vector<std::string>>();
  }
  std::optional<bool> byte_fallback;
  if (body.contains("byte_fallback") && body["byte_fallback"].is_boolean()) {
    byte_fallback = body["byte_fallback"].get<bool>();
  } else if (doc.contains("byte_fallback") &&
             doc["byte_fallback"].is_boolean()) {
    byte_fallback = doc["byte_fallback"].get<bool>();
  }

  BpeTables tables{Vocabulary(std::move(by_id), specials, byte_fallback), {}};
  std::vector<MergeRule> rules;
  if (body.contains("merges")) {
    for (const auto& m : body["merges"]) {
      if (m.is_string()) {
        rules.push_back(split_merge_line(tables.vocab, m.get<std::string>()));
      } else {
        rules.push_back(pair_to_rule(tables.vocab, m.at(0).get<std::string>(),
                                     m.at(1).get<std::string>()));
      }
    }
  }
  tables.merges = MergeTable(tables.vocab, std::move(rules));
  return tables;
}

BpeTables load_tables(const std::filesystem::path& path) {
  namespace fs = std::filesystem;
  fs::path vocab_txt;
  if (fs::is_directory(path)) {
    vocab_txt = path / "vocab.txt";
  } else if (path.extension() == ".txt") {
    vocab_txt = path;
  } else {
    json doc;
    try {
      doc = json::parse(read_file(path));
    } catch (const json::exception& e) {
      throw Error(Error::Kind::Format,
                  path.string() + ": invalid JSON: " + e.what());
    }
    return parse_tables_json(doc);
  }

  auto lines = read_lines(vocab_txt);
  while (!lines.empty() && lines.back().empty()) lines.pop_back();
  BpeTables tables{Vocabulary(std::move(lines)), {}};
  const fs::path merges_txt = vocab_txt.parent_path() / "merges.txt";
  std::vector<MergeRule> rules;
  if (fs::exists(merges_txt)) {
    for (const auto& line : read_lines(merges_txt)) {
      if (line.empty() || line.starts_with("#version")) continue;
      rules.push_back(split_merge_line(tables.vocab, line));
    }
  }
  tables.merges = MergeTable(tables.vocab, std::move(rules));
  return tables;
}

json tables_to_json(const BpeTables& tables) {
  json merges = json::array();
  for (const auto& r : tables.merges.rules()) {
    merges.push_back(tables.vocab.token(r.left) + " " +
                     tables.vocab.token(r.right));
  }
  return {{"vocab", tables.vocab.to_json()}, {"merges", std::move(merges)}};
}

std::string pretokenize(std::string_view text, Pretokenizer mode) {
  if (mode == Pretokenizer::WholeString) return std::string(text);
  std::string out;
  if (text.empty() || text.front() != ' ') out += kMetaspace;
  for (char c : text) {
    if (c == ' ') {
      out += kMetaspace;
    } else {
      out += c;
    }
  }
  return out;
}

std::string to_surface(std::string_view raw, Pretokenizer mode) {
  if (mode == Pretokenizer::WholeString) return std::string(raw);
  std::string out;
  for (std::size_t i = 0; i < raw.size();) {
    if (raw.substr(i, kMetaspace.size()) == kMetaspace) {
      out += ' ';
      i += kMetaspace.size();
    } else {
      out += raw[i++];
    }
  }
  return out;
}

}  // namespace tokspace
