#pragma once

#include <span>

#include "tokspace/types.hpp"

namespace tokspace {

// Running log-sum-exp with max rescaling and Neumaier-compensated summation
// of the rescaled terms. Adding terms in a fixed order gives results that are
// reproducible across platforms.
class LogSumExp {
 public:
  void add(LogProb x);
  // Folds another accumulator in as if its terms had been added after ours.
  void merge(const LogSumExp& other);

  LogProb value() const;
  bool empty() const { return max_ == kLogZero; }

 private:
  void add_scaled(double term);

  LogProb max_ = kLogZero;
  double sum_ = 0.0;
  double compensation_ = 0.0;
};

LogProb log_sum_exp(std::span<const LogProb> xs);

// Balanced binary-tree reduction; the tree shape depends only on xs.size(),
// so serial and parallel callers get bit-identical values.
LogProb pairwise_log_sum_exp(std::span<const LogProb> xs);

// log((1/N) sum exp(x_i)).
LogProb log_mean_exp(std::span<const LogProb> xs);

// (sum w)^2 / sum w^2 computed from log weights; 0 when every weight is zero.
double effective_sample_size(std::span<const LogProb> log_weights);

// log(exp(a) + exp(b)).
LogProb log_add(LogProb a, LogProb b);

}  // namespace tokspace
