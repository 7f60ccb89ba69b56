#pragma once

#include <cstddef>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "expadam/dataset.hpp"
#include "expadam/optimizer.hpp"
#include "expadam/rng.hpp"
#include "expadam/tensor.hpp"

namespace expadam {

/// Row indices into a problem's dataset. An empty batch selects every row.
using Batch = std::span<const std::size_t>;

struct KnownOptimum {
  TensorMap params;
  double loss;
};

struct LossAndGradient {
  double loss;
  TensorMap grads;
};

/// A differentiable objective with an analytic gradient.
class Problem {
public:
  virtual ~Problem() = default;

  virtual std::string name() const = 0;
  virtual std::vector<std::pair<std::string, Shape>> param_shapes() const = 0;
  virtual LossAndGradient evaluate(const TensorMap& params, Batch batch) const = 0;
  virtual TensorMap initial_params(Rng& rng) const = 0;

  double loss(const TensorMap& params, Batch batch) const { return evaluate(params, batch).loss; }
  TensorMap grad(const TensorMap& params, Batch batch) const { return evaluate(params, batch).grads; }

  /// Rows available for batching; analytic test functions have one.
  virtual std::size_t num_samples() const { return 1; }
  virtual std::optional<KnownOptimum> known_optimum() const { return std::nullopt; }

protected:
  void check_params(const TensorMap& params) const;
};

/// f(theta) = 1/2 * sum a_i theta_i^2 with a log-spaced in [1, condition].
class QuadraticProblem final : public Problem {
public:
  QuadraticProblem(std::size_t dim, double condition);

  std::string name() const override { return "quadratic"; }
  std::vector<std::pair<std::string, Shape>> param_shapes() const override;
  LossAndGradient evaluate(const TensorMap& params, Batch batch) const override;
  /// Uniform in [-1, 1] per coordinate.
  TensorMap initial_params(Rng& rng) const override;
  std::optional<KnownOptimum> known_optimum() const override;

  const std::vector<double>& curvatures() const noexcept { return a_; }

private:
  std::vector<double> a_;
};

/// f(x, y) = (1 - x)^2 + 100 (y - x^2)^2, parameter "xy" of shape [2].
class RosenbrockProblem final : public Problem {
public:
  std::string name() const override { return "rosenbrock"; }
  std::vector<std::pair<std::string, Shape>> param_shapes() const override;
  LossAndGradient evaluate(const TensorMap& params, Batch batch) const override;
  /// The classical start (-1.2, 1); independent of the generator.
  TensorMap initial_params(Rng& rng) const override;
  std::optional<KnownOptimum> known_optimum() const override;
};

struct SoftmaxXent {
  double loss;
  Tensor dlogits;  // N x C
  Tensor probs;    // N x C
};

/// Mean cross-entropy of row-wise softmax(logits) against labels, with
/// max-subtraction. dlogits = (softmax - onehot) / N.
SoftmaxXent softmax_xent(const Tensor& logits, std::span<const int> labels);

/// Row-wise softmax of an N x C tensor.
Tensor softmax_rows(const Tensor& logits);

/// Softmax classifier over a dataset. Subclasses provide the forward pass and
/// its backward pass from dlogits.
class ClassifierProblem : public Problem {
public:
  explicit ClassifierProblem(Dataset data);

  const Dataset& data() const noexcept { return data_; }
  std::size_t num_samples() const override { return data_.size(); }
  LossAndGradient evaluate(const TensorMap& params, Batch batch) const override;

  /// N x C logits for every row of `data`, which must have this problem's
  /// feature and class counts.
  virtual Tensor logits(const TensorMap& params, const Dataset& data) const = 0;
  Tensor predict_proba(const TensorMap& params, const Dataset& data) const;

protected:
  struct Cache;
  virtual Tensor forward(const TensorMap& params, const Dataset& batch, Cache& cache) const = 0;
  virtual TensorMap backward(const TensorMap& params, const Dataset& batch, const Cache& cache,
                             const Tensor& dlogits) const = 0;

  struct Cache {
    Tensor hidden;  // post-activation hidden layer, MLP only
  };

  void check_compatible(const Dataset& other) const;

  Dataset data_;
};

/// Multinomial logistic regression: logits = X W + b.
class LogRegProblem final : public ClassifierProblem {
public:
  explicit LogRegProblem(Dataset data);

  std::string name() const override { return "logreg"; }
  std::vector<std::pair<std::string, Shape>> param_shapes() const override;
  TensorMap initial_params(Rng& rng) const override;
  Tensor logits(const TensorMap& params, const Dataset& data) const override;

protected:
  Tensor forward(const TensorMap& params, const Dataset& batch, Cache& cache) const override;
  TensorMap backward(const TensorMap& params, const Dataset& batch, const Cache& cache,
                     const Tensor& dlogits) const override;
};

/// One tanh hidden layer: logits = tanh(X W1 + b1) W2 + b2.
class MlpProblem final : public ClassifierProblem {
public:
  MlpProblem(Dataset data, std::size_t hidden);

  std::string name() const override { return "mlp"; }
  std::vector<std::pair<std::string, Shape>> param_shapes() const override;
  /// Glorot-normal weights, zero biases.
  TensorMap initial_params(Rng& rng) const override;
  Tensor logits(const TensorMap& params, const Dataset& data) const override;

  std::size_t hidden() const noexcept { return hidden_; }

protected:
  Tensor forward(const TensorMap& params, const Dataset& batch, Cache& cache) const override;
  TensorMap backward(const TensorMap& params, const Dataset& batch, const Cache& cache,
                     const Tensor& dlogits) const override;

private:
  std::size_t hidden_;
};

std::unique_ptr<Problem> quadratic_problem(std::size_t dim, double condition);
std::unique_ptr<Problem> rosenbrock_problem();
std::unique_ptr<ClassifierProblem> logreg_problem(Dataset data);
std::unique_ptr<ClassifierProblem> mlp_problem(Dataset data, std::size_t hidden);

/// Five-point central differences against the analytic gradient; returns the largest
/// |a - n| / max(|a|, |n|, 1e-8) over every coordinate.
double finite_diff_check(const Problem& problem, const TensorMap& params, Batch batch, double h);

}  // namespace expadam
