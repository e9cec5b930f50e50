#include "tokspace/hardness.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "tokspace/error.hpp"

namespace tokspace {
namespace {

namespace tok = reduction_token;

const LogProb kLog045 = std::log(0.45);
const LogProb kLog09 = std::log(0.9);
const LogProb kLog0025 = std::log(0.025);
const LogProb kLog02 = std::log(0.2);
// Printed as 0.033; 0.1/3 keeps the row normalized.
const LogProb kLogResidual = std::log(0.1 / 3.0);

bool starts_variable(TokenId t) { return t == tok::a || t == tok::ab; }

}  // namespace

void CnfFormula::validate() const {
  if (n_vars < 1) throw Error(Error::Kind::Format, "CNF needs n_vars >= 1");
  for (const auto& clause : clauses) {
    if (clause.empty() || clause.size() > 3) {
      throw Error(Error::Kind::Format,
                  "each clause must have between 1 and 3 literals");
    }
    for (const auto& lit : clause) {
      if (lit.var < 1 || lit.var > n_vars) {
        throw Error(Error::Kind::Format,
                    "literal variable " + std::to_string(lit.var) +
                        " outside 1.." + std::to_string(n_vars));
      }
    }
  }
}

bool CnfFormula::satisfied_by(std::uint64_t assignment) const {
  for (const auto& clause : clauses) {
    bool sat = false;
    for (const auto& lit : clause) {
      const bool value = (assignment >> (lit.var - 1)) & 1U;
      if (value == lit.positive) {
        sat = true;
        break;
      }
    }
    if (!sat) return false;
  }
  return true;
}

CnfFormula parse_dimacs(std::istream& in) {
  CnfFormula cnf;
  bool have_header = false;
  std::vector<Literal> current;
  std::string line;
  while (std::getline(in, line)) {
    std::istringstream ls(line);
    std::string first;
    if (!(ls >> first)) continue;
    if (first == "c") continue;
    if (first == "%") break;
    if (first == "p") {
      std::string fmt;
      long long clauses = 0;
      if (!(ls >> fmt >> cnf.n_vars >> clauses) || fmt != "cnf") {
        throw Error(Error::Kind::Format, "malformed DIMACS header: " + line);
      }
      have_header = true;
      continue;
    }
    if (!have_header) {
      throw Error(Error::Kind::Format, "DIMACS clause before 'p cnf' header");
    }
    std::istringstream values(line);
    long long v = 0;
    while (values >> v) {
      if (v == 0) {
        cnf.clauses.push_back(std::move(current));
        current.clear();
      } else {
        current.push_back({static_cast<int>(std::llabs(v)), v > 0});
      }
    }
    if (!values.eof()) {
      throw Error(Error::Kind::Format, "non-integer token in DIMACS: " + line);
    }
  }
  if (!current.empty()) cnf.clauses.push_back(std::move(current));
  if (!have_header) throw Error(Error::Kind::Format, "missing 'p cnf' header");
  cnf.validate();
  return cnf;
}

CnfFormula parse_dimacs_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(Error::Kind::Format, "cannot open " + path);
  return parse_dimacs(in);
}

nlohmann::json cnf_to_json(const CnfFormula& cnf) {
  nlohmann::json clauses = nlohmann::json::array();
  for (const auto& clause : cnf.clauses) {
    std::vector<int> lits;
    for (const auto& l : clause) lits.push_back(l.positive ? l.var : -l.var);
    clauses.push_back(lits);
  }
  return {{"n_vars", cnf.n_vars}, {"clauses", clauses}};
}

CnfFormula cnf_from_json(const nlohmann::json& doc) {
  CnfFormula cnf;
  cnf.n_vars = doc.at("n_vars").get<int>();
  for (const auto& clause : doc.at("clauses")) {
    std::vector<Literal> lits;
    for (int v : clause.get<std::vector<int>>()) {
      lits.push_back({std::abs(v), v > 0});
    }
    cnf.clauses.push_back(std::move(lits));
  }
  cnf.validate();
  return cnf;
}

std::uint64_t brute_force_count(const CnfFormula& cnf) {
  if (cnf.n_vars > 24) {
    throw Error(Error::Kind::TooManyVariables,
                "truth-table counting is limited to 24 variables");
  }
  // Clause as (positive mask, negative mask): satisfied iff it shares a bit
  // with the assignment or with its complement.
  std::vector<std::pair<std::uint32_t, std::uint32_t>> masks;
  for (const auto& clause : cnf.clauses) {
    std::uint32_t pos = 0, neg = 0;
    for (const auto& l : clause) {
      (l.positive ? pos : neg) |= 1U << (l.var - 1);
    }
    masks.emplace_back(pos, neg);
  }
  const std::uint32_t total = 1U << cnf.n_vars;
  std::uint64_t count = 0;
  for (std::uint32_t a = 0; a < total; ++a) {
    bool ok = true;
    for (const auto& [pos, neg] : masks) {
      if (!((a & pos) | (~a & neg))) {
        ok = false;
        break;
      }
    }
    count += ok;
  }
  return count;
}

ReductionModel::ReductionModel(Theorem theorem, CnfFormula cnf)
    : theorem_(theorem), cnf_(std::move(cnf)) {
  cnf_.validate();
  if (theorem_ == Theorem::MostLikely) {
    clause_case_ = {kLog09, kLog0025, std::log(0.1), std::log(0.225)};
  } else {
    const double exponent = cnf_.n_vars + cnf_.clauses.size() + 1.0;
    const LogProb log_eps = exponent * std::log(0.5);
    const LogProb log_one_minus_eps = std::log1p(-std::exp(log_eps));
    clause_case_ = {log_one_minus_eps, log_eps - std::log(4.0), log_eps,
                    log_one_minus_eps - std::log(4.0)};
  }
}

bool ReductionModel::clause_satisfied(std::size_t k,
                                      std::span<const TokenId> prefix) const {
  if (k < 1 || k > cnf_.clauses.size()) return true;
  for (const auto& lit : cnf_.clauses[k - 1]) {
    const std::size_t pos = 2 * static_cast<std::size_t>(lit.var - 1);
    const bool value = pos < prefix.size() && prefix[pos] == tok::a;
    if (value == lit.positive) return true;
  }
  return false;
}

std::vector<LogProb> ReductionModel::full_logprobs(
    std::span<const TokenId> prefix) const {
  for (TokenId t : prefix) {
    if (t < 0 || t > 4) {
      throw Error(Error::Kind::UnknownTokenId,
                  "token id " + std::to_string(t) +
                      " outside the reduction vocabulary");
    }
  }
  const std::size_t i = prefix.size();
  const std::size_t two_n = 2 * static_cast<std::size_t>(cnf_.n_vars);
  std::vector<LogProb> out(5);
  auto favour = [&](auto pred, LogProb hit, LogProb miss) {
    for (TokenId t = 0; t < 5; ++t) out[t] = pred(t) ? hit : miss;
  };

  if (i == 0) {
    favour(starts_variable, kLog045, kLogResidual);
  } else if (i < two_n) {
    const TokenId prev = prefix[i - 1];
    if (prev == tok::a) {
      favour([](TokenId t) { return t == tok::bc; }, kLog09, kLog0025);
    } else if (prev == tok::ab) {
      // The printed table repeats the "= c" case; the miss row is "!= c".
      favour([](TokenId t) { return t == tok::c; }, kLog09, kLog0025);
    } else if (prev == tok::bc || prev == tok::c) {
      favour(starts_variable, kLog045, kLogResidual);
    } else {
      // prev == d before position 2n: unreachable on the reduction string.
      favour([](TokenId) { return true; }, kLog02, kLog02);
    }
  } else {
    const bool sat = clause_satisfied(i + 1 - two_n, prefix);
    const LogProb hit = sat ? clause_case_[0] : clause_case_[2];
    const LogProb miss = sat ? clause_case_[1] : clause_case_[3];
    favour([](TokenId t) { return t == tok::d; }, hit, miss);
  }
  return out;
}

std::vector<LogProb> ReductionModel::next_logprobs(
    std::span<const TokenId> prefix, std::span<const TokenId> candidates) const {
  const auto full = full_logprobs(prefix);
  std::vector<LogProb> out;
  out.reserve(candidates.size());
  for (TokenId c : candidates) {
    if (c < 0 || c > 4) {
      throw Error(Error::Kind::UnknownTokenId,
                  "token id " + std::to_string(c) +
                      " outside the reduction vocabulary");
    }
    out.push_back(full[static_cast<std::size_t>(c)]);
  }
  return out;
}

std::string ReductionModel::describe() const {
  std::ostringstream s;
  s << "theorem" << static_cast<int>(theorem_) << "(n=" << cnf_.n_vars
    << ", K=" << cnf_.clauses.size() << ")";
  return s.str();
}

LogProb ReductionInstance::log_base() const {
  return n() * (kLog045 + kLog09);
}

LogProb ReductionInstance::threshold() const {
  return std::log(0.5) + n() * kLog045 + (n() + k()) * kLog09;
}

std::pair<LogProb, LogProb> ReductionInstance::window(
    std::uint64_t count) const {
  const double c = static_cast<double>(count);
  const LogProb lower = count == 0 ? kLogZero : std::log(c - 0.5) + log_base();
  return {lower, std::log(c + 0.5) + log_base()};
}

TokenIds ReductionInstance::tokenization_of(std::uint64_t assignment) const {
  TokenIds ids;
  for (int j = 0; j < n(); ++j) {
    if ((assignment >> j) & 1U) {
      ids.push_back(tok::a);
      ids.push_back(tok::bc);
    } else {
      ids.push_back(tok::ab);
      ids.push_back(tok::c);
    }
  }
  ids.insert(ids.end(), static_cast<std::size_t>(k()), tok::d);
  return ids;
}

std::uint64_t ReductionInstance::assignment_of(
    std::span<const TokenId> ids) const {
  std::uint64_t assignment = 0;
  for (int j = 0; j < n(); ++j) {
    const std::size_t pos = 2 * static_cast<std::size_t>(j);
    if (pos < ids.size() && ids[pos] == tok::a) assignment |= 1ULL << j;
  }
  return assignment;
}

ReductionInstance build_reduction(Theorem theorem, const CnfFormula& cnf) {
  cnf.validate();
  ReductionInstance inst{theorem, cnf, {}, {}, nullptr};
  for (int j = 0; j < cnf.n_vars; ++j) inst.text += "abc";
  inst.text.append(cnf.clauses.size(), 'd');
  inst.tables.vocab = Vocabulary({"a", "bc", "ab", "c", "d"});
  inst.model = std::make_shared<const ReductionModel>(theorem, cnf);
  return inst;
}

ReductionInstance build_theorem1(const CnfFormula& cnf) {
  return build_reduction(Theorem::MostLikely, cnf);
}

ReductionInstance build_theorem2(const CnfFormula& cnf) {
  return build_reduction(Theorem::Marginal, cnf);
}

std::uint64_t recover_count(const ReductionInstance& instance,
                            LogProb log_marginal) {
  if (instance.n() > 62) {
    throw Error(Error::Kind::TooManyVariables, "count range exceeds 2^62");
  }
  // Smallest C whose upper edge lies above the marginal.
  std::uint64_t lo = 0;
  std::uint64_t hi = 1ULL << instance.n();
  while (lo < hi) {
    const std::uint64_t mid = lo + (hi - lo) / 2;
    if (log_marginal < instance.window(mid).second) {
      hi = mid;
    } else {
      lo = mid + 1;
    }
  }
  const auto [lower, upper] = instance.window(lo);
  if (!(log_marginal > lower && log_marginal < upper)) {
    throw Error(Error::Kind::NoWindow,
                "marginal lies in no count window (estimation failure?)");
  }
  return lo;
}

}  // namespace tokspace
