#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "expadam/ensemble.hpp"

namespace expadam {

/// counts(true, predicted), C x C.
class ConfusionMatrix {
public:
  explicit ConfusionMatrix(std::size_t num_classes);

  void add(std::size_t truth, std::size_t predicted);

  std::size_t num_classes() const noexcept { return c_; }
  std::int64_t operator()(std::size_t truth, std::size_t predicted) const {
    return counts_[truth * c_ + predicted];
  }
  std::int64_t total() const noexcept { return total_; }
  std::int64_t row_sum(std::size_t truth) const;
  std::int64_t col_sum(std::size_t predicted) const;

  double accuracy() const;
  /// Class-frequency-weighted one-vs-all F1. Classes with precision + recall
  /// of zero score 0.
  double weighted_f_score() const;
  /// Class-frequency-weighted one-vs-all sqrt(sensitivity * specificity). An
  /// undefined factor (empty denominator) counts as 0.
  double weighted_g_mean() const;

private:
  std::size_t c_;
  std::vector<std::int64_t> counts_;
  std::int64_t total_ = 0;
};

/// Argmax predictions (lowest index wins ties) against labels.
ConfusionMatrix confusion(const ProbabilityMatrix& pm, std::span<const int> labels);

double accuracy(const ProbabilityMatrix& pm, std::span<const int> labels);
double weighted_f_score(const ProbabilityMatrix& pm, std::span<const int> labels);
double weighted_g_mean(const ProbabilityMatrix& pm, std::span<const int> labels);

}  // namespace expadam
