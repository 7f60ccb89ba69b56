#pragma once

// Per-sample reimplementation of the class-weighted one-vs-all metrics that
// never builds a confusion matrix.

#include <cmath>
#include <vector>

namespace metric_oracle {

struct Scores {
  double accuracy = 0, f = 0, g = 0;
};

inline Scores score(const std::vector<int>& truth, const std::vector<int>& pred, int classes) {
  const double n = static_cast<double>(truth.size());
  Scores s;
  for (std::size_t i = 0; i < truth.size(); ++i) s.accuracy += truth[i] == pred[i];
  s.accuracy /= n;
  for (int c = 0; c < classes; ++c) {
    double tp = 0, fp = 0, fn = 0, tn = 0;
    for (std::size_t i = 0; i < truth.size(); ++i) {
      const bool is_c = truth[i] == c, said_c = pred[i] == c;
      tp += is_c && said_c;
      fp += !is_c && said_c;
      fn += is_c && !said_c;
      tn += !is_c && !said_c;
    }
    const double support = tp + fn;
    if (support == 0) continue;
    const double precision = tp + fp > 0 ? tp / (tp + fp) : 0.0;
    const double recall = tp / support;
    const double f1 = precision + recall > 0 ? 2 * precision * recall / (precision + recall) : 0.0;
    const double specificity = tn + fp > 0 ? tn / (tn + fp) : 0.0;
    s.f += support / n * f1;
    s.g += support / n * std::sqrt(recall * specificity);
  }
  return s;
}

}  // namespace metric_oracle
