#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <vector>

#include "expadam/tensor.hpp"

namespace expadam {

/// N x C classifier outputs; each row is a probability distribution.
class ProbabilityMatrix {
public:
  static constexpr double kRowSumTolerance = 1e-9;

  /// Throws std::invalid_argument if an entry is negative or non-finite, or a
  /// row sum is off by more than kRowSumTolerance.
  ProbabilityMatrix(std::size_t rows, std::size_t cols, std::vector<double> probs);
  /// From an N x C tensor, e.g. softmax_rows output.
  explicit ProbabilityMatrix(const Tensor& probs);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::span<const double> row(std::size_t i) const { return {probs_.data() + i * cols_, cols_}; }
  double operator()(std::size_t i, std::size_t c) const { return probs_[i * cols_ + c]; }
  const std::vector<double>& values() const noexcept { return probs_; }

  /// Index of the largest entry; ties go to the lowest class index.
  std::size_t argmax(std::size_t i) const;

  friend bool operator==(const ProbabilityMatrix&, const ProbabilityMatrix&) = default;

private:
  std::size_t rows_;
  std::size_t cols_;
  std::vector<double> probs_;
};

/// Average rule: element-wise arithmetic mean of the members.
ProbabilityMatrix fuse_average(std::span<const ProbabilityMatrix> members);

/// Weighted sum rule, normalized by the weight total.
ProbabilityMatrix fuse_weighted_sum(std::span<const ProbabilityMatrix> members,
                                    std::span<const double> weights);

/// CSV with header c0..cC-1, one row per sample.
void write_csv(const ProbabilityMatrix& pm, std::ostream& out);
void write_csv(const ProbabilityMatrix& pm, const std::filesystem::path& path);
ProbabilityMatrix read_probability_csv(std::istream& in);
ProbabilityMatrix read_probability_csv(const std::filesystem::path& path);

}  // namespace expadam
