#include "expadam/metrics.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace expadam {

ConfusionMatrix::ConfusionMatrix(std::size_t num_classes)
    : c_(num_classes), counts_(num_classes * num_classes, 0) {
  if (c_ == 0) throw std::invalid_argument("confusion matrix: need at least one class");
}

void ConfusionMatrix::add(std::size_t truth, std::size_t predicted) {
  if (truth >= c_ || predicted >= c_) throw std::out_of_range("confusion matrix: class out of range");
  ++counts_[truth * c_ + predicted];
  ++total_;
}

std::int64_t ConfusionMatrix::row_sum(std::size_t truth) const {
  std::int64_t s = 0;
  for (std::size_t p = 0; p < c_; ++p) s += (*this)(truth, p);
  return s;
}

std::int64_t ConfusionMatrix::col_sum(std::size_t predicted) const {
  std::int64_t s = 0;
  for (std::size_t t = 0; t < c_; ++t) s += (*this)(t, predicted);
  return s;
}

double ConfusionMatrix::accuracy() const {
  if (total_ == 0) return 0.0;
  std::int64_t hits = 0;
  for (std::size_t c = 0; c < c_; ++c) hits += (*this)(c, c);
  return static_cast<double>(hits) / static_cast<double>(total_);
}

double ConfusionMatrix::weighted_f_score() const {
  if (total_ == 0) return 0.0;
  double score = 0.0;
  for (std::size_t c = 0; c < c_; ++c) {
    const auto support = row_sum(c);
    if (support == 0) continue;
    const auto tp = static_cast<double>((*this)(c, c));
    const auto predicted = col_sum(c);
    const double precision = predicted ? tp / static_cast<double>(predicted) : 0.0;
    const double recall = tp / static_cast<double>(support);
    const double f1 = precision + recall > 0.0 ? 2.0 * precision * recall / (precision + recall) : 0.0;
    score += static_cast<double>(support) / static_cast<double>(total_) * f1;
  }
  return score;
}

double ConfusionMatrix::weighted_g_mean() const {
  if (total_ == 0) return 0.0;
  double score = 0.0;
  for (std::size_t c = 0; c < c_; ++c) {
    const auto support = row_sum(c);
    if (support == 0) continue;
    const auto tp = (*this)(c, c);
    const auto fp = col_sum(c) - tp;
    const auto negatives = total_ - support;
    const auto tn = negatives - fp;
    const double sensitivity = static_cast<double>(tp) / static_cast<double>(support);
    const double specificity = negatives ? static_cast<double>(tn) / static_cast<double>(negatives) : 0.0;
    score += static_cast<double>(support) / static_cast<double>(total_) *
             std::sqrt(sensitivity * specificity);
  }
  return score;
}

ConfusionMatrix confusion(const ProbabilityMatrix& pm, std::span<const int> labels) {
  if (labels.size() != pm.rows())
    throw std::invalid_argument("confusion: " + std::to_string(labels.size()) + " labels for " +
                                std::to_string(pm.rows()) + " rows");
  ConfusionMatrix cm(pm.cols());
  for (std::size_t i = 0; i < pm.rows(); ++i) {
    if (labels[i] < 0 || static_cast<std::size_t>(labels[i]) >= pm.cols())
      throw std::invalid_argument("confusion: label out of range");
    cm.add(static_cast<std::size_t>(labels[i]), pm.argmax(i));
  }
  return cm;
}

double accuracy(const ProbabilityMatrix& pm, std::span<const int> labels) {
  return confusion(pm, labels).accuracy();
}

double weighted_f_score(const ProbabilityMatrix& pm, std::span<const int> labels) {
  return confusion(pm, labels).weighted_f_score();
}

double weighted_g_mean(const ProbabilityMatrix& pm, std::span<const int> labels) {
  return confusion(pm, labels).weighted_g_mean();
}

}  // namespace expadam
