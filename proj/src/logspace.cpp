#include "tokspace/logspace.hpp"

#include <cmath>
#include <vector>

namespace tokspace {

void LogSumExp::add_scaled(double term) {
  const double t = sum_ + term;
  if (std::abs(sum_) >= std::abs(term)) {
    compensation_ += (sum_ - t) + term;
  } else {
    compensation_ += (term - t) + sum_;
  }
  sum_ = t;
}

void LogSumExp::add(LogProb x) {
  if (x == kLogZero) return;
  if (x > max_) {
    if (max_ != kLogZero) {
      const double scale = std::exp(max_ - x);
      sum_ *= scale;
      compensation_ *= scale;
    }
    max_ = x;
    add_scaled(1.0);
  } else {
    add_scaled(std::exp(x - max_));
  }
}

void LogSumExp::merge(const LogSumExp& other) {
  if (other.empty()) return;
  if (empty()) {
    *this = other;
    return;
  }
  const double other_total = other.sum_ + other.compensation_;
  if (other.max_ > max_) {
    const double scale = std::exp(max_ - other.max_);
    sum_ *= scale;
    compensation_ *= scale;
    max_ = other.max_;
    add_scaled(other_total);
  } else {
    add_scaled(other_total * std::exp(other.max_ - max_));
  }
}

LogProb LogSumExp::value() const {
  if (empty()) return kLogZero;
  return max_ + std::log(sum_ + compensation_);
}

LogProb log_add(LogProb a, LogProb b) {
  if (a == kLogZero) return b;
  if (b == kLogZero) return a;
  if (a < b) std::swap(a, b);
  return a + std::log1p(std::exp(b - a));
}

LogProb log_sum_exp(std::span<const LogProb> xs) {
  LogSumExp acc;
  for (LogProb x : xs) acc.add(x);
  return acc.value();
}

LogProb pairwise_log_sum_exp(std::span<const LogProb> xs) {
  if (xs.empty()) return kLogZero;
  std::vector<LogProb> level(xs.begin(), xs.end());
  while (level.size() > 1) {
    std::vector<LogProb> next((level.size() + 1) / 2);
    for (std::size_t i = 0; i + 1 < level.size(); i += 2) {
      next[i / 2] = log_add(level[i], level[i + 1]);
    }
    if (level.size() % 2 == 1) next.back() = level.back();
    level.swap(next);
  }
  return level.front();
}

LogProb log_mean_exp(std::span<const LogProb> xs) {
  if (xs.empty()) return kLogZero;
  return pairwise_log_sum_exp(xs) - std::log(static_cast<double>(xs.size()));
}

double effective_sample_size(std::span<const LogProb> log_weights) {
  const LogProb total = pairwise_log_sum_exp(log_weights);
  if (total == kLogZero) return 0.0;
  std::vector<LogProb> doubled(log_weights.begin(), log_weights.end());
  for (auto& w : doubled) w *= 2.0;
  return std::exp(2.0 * total - pairwise_log_sum_exp(doubled));
}

}  // namespace tokspace
