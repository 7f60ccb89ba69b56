#include "expadam/problems.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace expadam {

namespace {

const Tensor& param(const TensorMap& params, const std::string& name) {
  auto it = params.find(name);
  if (it == params.end()) throw std::invalid_argument("missing parameter '" + name + "'");
  return it->second;
}

// out[N x M] = a[N x K] * b[K x M] (+ bias[M])
void matmul_add(std::span<const double> a, std::span<const double> b, std::span<const double> bias,
                std::size_t n, std::size_t k, std::size_t m, std::span<double> out) {
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t c = 0; c < m; ++c) out[i * m + c] = bias.empty() ? 0.0 : bias[c];
    for (std::size_t j = 0; j < k; ++j) {
      const double aij = a[i * k + j];
      for (std::size_t c = 0; c < m; ++c) out[i * m + c] += aij * b[j * m + c];
    }
  }
}

// out[K x M] = a[N x K]^T * d[N x M]
void matmul_tn(std::span<const double> a, std::span<const double> d, std::size_t n, std::size_t k,
               std::size_t m, std::span<double> out) {
  std::fill(out.begin(), out.end(), 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < k; ++j) {
      const double aij = a[i * k + j];
      for (std::size_t c = 0; c < m; ++c) out[j * m + c] += aij * d[i * m + c];
    }
}

void column_sums(std::span<const double> d, std::size_t n, std::size_t m, std::span<double> out) {
  std::fill(out.begin(), out.end(), 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t c = 0; c < m; ++c) out[c] += d[i * m + c];
}

}  // namespace

void Problem::check_params(const TensorMap& params) const {
  const auto shapes = param_shapes();
  if (params.size() != shapes.size())
    throw std::invalid_argument(name() + ": expected " + std::to_string(shapes.size()) +
                                " parameter tensors, got " + std::to_string(params.size()));
  for (const auto& [n, shape] : shapes) {
    const Tensor& t = param(params, n);
    if (t.shape() != shape)
      throw std::invalid_argument(name() + ": parameter '" + n + "' has shape " +
                                  to_string(t.shape()) + ", expected " + to_string(shape));
  }
}

// ---------------------------------------------------------------- quadratic

QuadraticProblem::QuadraticProblem(std::size_t dim, double condition) {
  if (dim < 1) throw std::invalid_argument("quadratic: dim must be >= 1");
  if (!(condition >= 1.0)) throw std::invalid_argument("quadratic: condition must be >= 1");
  a_.resize(dim);
  for (std::size_t i = 0; i < dim; ++i) {
    const double frac = dim == 1 ? 0.0 : static_cast<double>(i) / static_cast<double>(dim - 1);
    a_[i] = std::pow(condition, frac);
  }
}

std::vector<std::pair<std::string, Shape>> QuadraticProblem::param_shapes() const {
  return {{"theta", Shape{a_.size()}}};
}

LossAndGradient QuadraticProblem::evaluate(const TensorMap& params, Batch) const {
  check_params(params);
  const Tensor& theta = param(params, "theta");
  Tensor g = zeros_like(theta);
  double loss = 0.0;
  for (std::size_t i = 0; i < a_.size(); ++i) {
    loss += 0.5 * a_[i] * theta[i] * theta[i];
    g[i] = a_[i] * theta[i];
  }
  return {loss, {{"theta", std::move(g)}}};
}

TensorMap QuadraticProblem::initial_params(Rng& rng) const {
  Tensor theta(Shape{a_.size()});
  for (auto& v : theta.data()) v = rng.uniform(-1.0, 1.0);
  return {{"theta", std::move(theta)}};
}

std::optional<KnownOptimum> QuadraticProblem::known_optimum() const {
  return KnownOptimum{{{"theta", Tensor(Shape{a_.size()}, 0.0)}}, 0.0};
}

// --------------------------------------------------------------- rosenbrock

std::vector<std::pair<std::string, Shape>> RosenbrockProblem::param_shapes() const {
  return {{"xy", Shape{2}}};
}

LossAndGradient RosenbrockProblem::evaluate(const TensorMap& params, Batch) const {
  check_params(params);
  const Tensor& p = param(params, "xy");
  const double x = p[0], y = p[1];
  const double r = y - x * x;
  const double loss = (1.0 - x) * (1.0 - x) + 100.0 * r * r;
  Tensor g{-2.0 * (1.0 - x) - 400.0 * x * r, 200.0 * r};
  return {loss, {{"xy", std::move(g)}}};
}

TensorMap RosenbrockProblem::initial_params(Rng&) const { return {{"xy", Tensor{-1.2, 1.0}}}; }

std::optional<KnownOptimum> RosenbrockProblem::known_optimum() const {
  return KnownOptimum{{{"xy", Tensor{1.0, 1.0}}}, 0.0};
}

// ------------------------------------------------------------ softmax + xent

Tensor softmax_rows(const Tensor& logits) {
  if (logits.shape().size() != 2) throw ShapeError("softmax: logits must be N x C");
  const std::size_t n = logits.shape()[0], c = logits.shape()[1];
  Tensor probs = logits;
  auto p = probs.data();
  for (std::size_t i = 0; i < n; ++i) {
    auto row = p.subspan(i * c, c);
    const double mx = *std::max_element(row.begin(), row.end());
    double sum = 0.0;
    for (auto& v : row) {
      v = std::exp(v - mx);
      sum += v;
    }
    for (auto& v : row) v /= sum;
  }
  return probs;
}

SoftmaxXent softmax_xent(const Tensor& logits, std::span<const int> labels) {
  if (logits.shape().size() != 2) throw ShapeError("softmax_xent: logits must be N x C");
  const std::size_t n = logits.shape()[0], c = logits.shape()[1];
  if (labels.size() != n) throw std::invalid_argument("softmax_xent: label count mismatch");

  Tensor probs = softmax_rows(logits);
  Tensor dlogits = probs;
  double loss = 0.0;
  const double inv_n = 1.0 / static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i) {
    const int y = labels[i];
    if (y < 0 || static_cast<std::size_t>(y) >= c)
      throw std::invalid_argument("softmax_xent: label out of range");
    auto row = logits.data().subspan(i * c, c);
    const double mx = *std::max_element(row.begin(), row.end());
    double sum = 0.0;
    for (double v : row) sum += std::exp(v - mx);
    // -log softmax_y = log(sum) - (z_y - max)
    loss += std::log(sum) - (row[static_cast<std::size_t>(y)] - mx);
    dlogits[i * c + static_cast<std::size_t>(y)] -= 1.0;
  }
  for (auto& v : dlogits.data()) v *= inv_n;
  return {loss * inv_n, std::move(dlogits), std::move(probs)};
}

// --------------------------------------------------------------- classifier

ClassifierProblem::ClassifierProblem(Dataset data) : data_(std::move(data)) {
  if (data_.size() == 0) throw std::invalid_argument("classifier problem: empty dataset");
}

void ClassifierProblem::check_compatible(const Dataset& other) const {
  if (other.num_features != data_.num_features || other.num_classes != data_.num_classes) {
    throw std::invalid_argument(name() + ": dataset has " + std::to_string(other.num_features) +
                                " features / " + std::to_string(other.num_classes) +
                                " classes, model expects " + std::to_string(data_.num_features) +
                                " / " + std::to_string(data_.num_classes));
  }
}

LossAndGradient ClassifierProblem::evaluate(const TensorMap& params, Batch batch) const {
  check_params(params);
  const Dataset selected = batch.empty() ? Dataset{} : data_.subset(batch);
  const Dataset& rows = batch.empty() ? data_ : selected;
  Cache cache;
  const Tensor z = forward(params, rows, cache);
  auto xent = softmax_xent(z, rows.labels);
  return {xent.loss, backward(params, rows, cache, xent.dlogits)};
}

Tensor ClassifierProblem::predict_proba(const TensorMap& params, const Dataset& data) const {
  return softmax_rows(logits(params, data));
}

// ------------------------------------------------------------------- logreg

LogRegProblem::LogRegProblem(Dataset data) : ClassifierProblem(std::move(data)) {}

std::vector<std::pair<std::string, Shape>> LogRegProblem::param_shapes() const {
  return {{"W", Shape{data_.num_features, data_.num_classes}}, {"b", Shape{data_.num_classes}}};
}

TensorMap LogRegProblem::initial_params(Rng& rng) const {
  Tensor w(Shape{data_.num_features, data_.num_classes});
  for (auto& v : w.data()) v = 0.01 * rng.normal();
  return {{"W", std::move(w)}, {"b", Tensor(Shape{data_.num_classes}, 0.0)}};
}

Tensor LogRegProblem::logits(const TensorMap& params, const Dataset& data) const {
  check_params(params);
  check_compatible(data);
  Cache cache;
  return forward(params, data, cache);
}

Tensor LogRegProblem::forward(const TensorMap& params, const Dataset& batch, Cache&) const {
  const std::size_t n = batch.size(), d = batch.num_features, c = batch.num_classes;
  Tensor z(Shape{n, c});
  matmul_add(batch.features, param(params, "W").data(), param(params, "b").data(), n, d, c,
             z.data());
  return z;
}

TensorMap LogRegProblem::backward(const TensorMap&, const Dataset& batch, const Cache&,
                                  const Tensor& dlogits) const {
  const std::size_t n = batch.size(), d = batch.num_features, c = batch.num_classes;
  Tensor dw(Shape{d, c});
  Tensor db(Shape{c});
  matmul_tn(batch.features, dlogits.data(), n, d, c, dw.data());
  column_sums(dlogits.data(), n, c, db.data());
  return {{"W", std::move(dw)}, {"b", std::move(db)}};
}

// ---------------------------------------------------------------------- mlp

MlpProblem::MlpProblem(Dataset data, std::size_t hidden)
    : ClassifierProblem(std::move(data)), hidden_(hidden) {
  if (hidden_ == 0) throw std::invalid_argument("mlp: hidden width must be >= 1");
}

std::vector<std::pair<std::string, Shape>> MlpProblem::param_shapes() const {
  const std::size_t d = data_.num_features, c = data_.num_classes;
  return {{"W1", Shape{d, hidden_}}, {"W2", Shape{hidden_, c}}, {"b1", Shape{hidden_}}, {"b2", Shape{c}}};
}

TensorMap MlpProblem::initial_params(Rng& rng) const {
  const std::size_t d = data_.num_features, c = data_.num_classes;
  auto glorot = [&rng](std::size_t fan_in, std::size_t fan_out) {
    Tensor w(Shape{fan_in, fan_out});
    const double sd = std::sqrt(2.0 / static_cast<double>(fan_in + fan_out));
    for (auto& v : w.data()) v = sd * rng.normal();
    return w;
  };
  Tensor w1 = glorot(d, hidden_);
  Tensor w2 = glorot(hidden_, c);
  return {{"W1", std::move(w1)},
          {"W2", std::move(w2)},
          {"b1", Tensor(Shape{hidden_}, 0.0)},
          {"b2", Tensor(Shape{c}, 0.0)}};
}

Tensor MlpProblem::logits(const TensorMap& params, const Dataset& data) const {
  check_params(params);
  check_compatible(data);
  Cache cache;
  return forward(params, data, cache);
}

Tensor MlpProblem::forward(const TensorMap& params, const Dataset& batch, Cache& cache) const {
  const std::size_t n = batch.size(), d = batch.num_features, c = batch.num_classes;
  cache.hidden = Tensor(Shape{n, hidden_});
  matmul_add(batch.features, param(params, "W1").data(), param(params, "b1").data(), n, d, hidden_,
             cache.hidden.data());
  for (auto& v : cache.hidden.data()) v = std::tanh(v);
  Tensor z(Shape{n, c});
  matmul_add(cache.hidden.data(), param(params, "W2").data(), param(params, "b2").data(), n,
             hidden_, c, z.data());
  return z;
}

TensorMap MlpProblem::backward(const TensorMap& params, const Dataset& batch, const Cache& cache,
                               const Tensor& dlogits) const {
  const std::size_t n = batch.size(), d = batch.num_features, c = batch.num_classes;
  const Tensor& w2 = param(params, "W2");
  Tensor dw2(Shape{hidden_, c}), db2(Shape{c});
  matmul_tn(cache.hidden.data(), dlogits.data(), n, hidden_, c, dw2.data());
  column_sums(dlogits.data(), n, c, db2.data());

  // dz1 = (dlogits W2^T) o (1 - h^2)
  Tensor dz(Shape{n, hidden_});
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < hidden_; ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < c; ++k) s += dlogits[i * c + k] * w2[j * c + k];
      const double h = cache.hidden[i * hidden_ + j];
      dz[i * hidden_ + j] = s * (1.0 - h * h);
    }
  Tensor dw1(Shape{d, hidden_}), db1(Shape{hidden_});
  matmul_tn(batch.features, dz.data(), n, d, hidden_, dw1.data());
  column_sums(dz.data(), n, hidden_, db1.data());
  return {{"W1", std::move(dw1)}, {"W2", std::move(dw2)}, {"b1", std::move(db1)}, {"b2", std::move(db2)}};
}

// ---------------------------------------------------------------- factories

std::unique_ptr<Problem> quadratic_problem(std::size_t dim, double condition) {
  return std::make_unique<QuadraticProblem>(dim, condition);
}

std::unique_ptr<Problem> rosenbrock_problem() { return std::make_unique<RosenbrockProblem>(); }

std::unique_ptr<ClassifierProblem> logreg_problem(Dataset data) {
  return std::make_unique<LogRegProblem>(std::move(data));
}

std::unique_ptr<ClassifierProblem> mlp_problem(Dataset data, std::size_t hidden) {
  return std::make_unique<MlpProblem>(std::move(data), hidden);
}

double finite_diff_check(const Problem& problem, const TensorMap& params, Batch batch, double h) {
  if (!(h > 0.0)) throw std::invalid_argument("finite_diff_check: h must be > 0");
  const TensorMap analytic = problem.grad(params, batch);
  TensorMap probe = params;
  double worst = 0.0;
  for (auto& [name, tensor] : probe) {
    const Tensor& a = analytic.at(name);
    for (std::size_t i = 0; i < tensor.size(); ++i) {
      const double orig = tensor[i];
      auto at = [&](double steps) {
        tensor[i] = orig + steps * h;
        return problem.loss(probe, batch);
      };
      const double numeric = (8.0 * (at(1) - at(-1)) - (at(2) - at(-2))) / (12.0 * h);
      tensor[i] = orig;
      const double denom = std::max({std::fabs(a[i]), std::fabs(numeric), 1e-8});
      worst = std::max(worst, std::fabs(a[i] - numeric) / denom);
    }
  }
  return worst;
}

}  // namespace expadam
