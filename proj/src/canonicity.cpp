#include "tokspace/canonicity.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "tokspace/bpe.hpp"
#include "tokspace/error.hpp"

namespace tokspace {

namespace {

TokenIds parse_line(const std::string& line) {
  const auto first = line.find_first_not_of(" \t\r");
  if (first != std::string::npos && line[first] == '[') {
    return nlohmann::json::parse(line).get<TokenIds>();
  }
  std::string normalized = line;
  std::replace(normalized.begin(), normalized.end(), ',', ' ');
  std::istringstream in(normalized);
  TokenIds ids;
  std::string field;
  while (in >> field) {
    long long v = -1;
    const auto [end, ec] =
        std::from_chars(field.data(), field.data() + field.size(), v);
    if (ec != std::errc() || end != field.data() + field.size() || v < 0 ||
        v > INT32_MAX) {
      throw Error(Error::Kind::Format, "bad token id '" + field + "'");
    }
    ids.push_back(static_cast<TokenId>(v));
  }
  return ids;
}

TokenIds strip_markers(TokenIds ids, const Vocabulary& vocab) {
  if (vocab.bos() && !ids.empty() && ids.front() == *vocab.bos()) {
    ids.erase(ids.begin());
  }
  if (vocab.eos() && !ids.empty() && ids.back() == *vocab.eos()) {
    ids.pop_back();
  }
  return ids;
}

void accumulate(std::vector<CanonicityRow>& rows, std::span<const TokenId> ids,
                const Vocabulary& vocab, const MergeTable& merges) {
  for (std::size_t l = rows.size() + 1; l <= ids.size(); ++l) {
    rows.push_back({l, 0, 0, 0.0});
  }
  for (std::size_t l = 1; l <= ids.size(); ++l) {
    ++rows[l - 1].sequences;
    if (is_canonical(ids.first(l), vocab, merges)) ++rows[l - 1].canonical;
  }
}

void finish(CanonicityTable& table) {
  for (auto& row : table.rows) {
    row.rate = static_cast<double>(row.canonical) /
               static_cast<double>(row.sequences);
  }
}

}  // namespace

std::size_t canonical_prefix_length(std::span<const TokenId> ids,
                                    const Vocabulary& vocab,
                                    const MergeTable& merges) {
  std::size_t l = 0;
  while (l < ids.size() && is_canonical(ids.first(l + 1), vocab, merges)) ++l;
  return l;
}

CanonicityTable canonicity_rate(std::istream& in, const Vocabulary& vocab,
                                const MergeTable& merges) {
  CanonicityTable table;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    try {
      const TokenIds ids = strip_markers(parse_line(line), vocab);
      decode(ids, vocab);
      accumulate(table.rows, ids, vocab, merges);
      ++table.sequences;
    } catch (const std::exception& e) {
      ++table.skipped;
      table.warnings.push_back("line " + std::to_string(line_no) + ": " +
                               e.what());
    }
  }
  finish(table);
  return table;
}

CanonicityTable canonicity_rate(const std::filesystem::path& path,
                                const Vocabulary& vocab,
                                const MergeTable& merges) {
  std::ifstream in(path);
  if (!in) throw Error(Error::Kind::Format, "cannot open " + path.string());
  return canonicity_rate(in, vocab, merges);
}

CanonicityTable canonicity_rate(std::span<const TokenIds> sequences,
                                const Vocabulary& vocab,
                                const MergeTable& merges) {
  CanonicityTable table;
  for (const auto& raw : sequences) {
    const TokenIds ids = strip_markers(raw, vocab);
    decode(ids, vocab);
    accumulate(table.rows, ids, vocab, merges);
    ++table.sequences;
  }
  finish(table);
  return table;
}

}  // namespace tokspace
