#include "expadam/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <sstream>

namespace expadam {

std::string to_string(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << ',';
    os << shape[i];
  }
  os << ']';
  return os.str();
}

std::size_t element_count(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

namespace {

void check_shape(const Shape& shape) {
  if (shape.empty()) throw ShapeError("tensor shape must have at least one dimension");
  for (auto d : shape) {
    if (d == 0) throw ShapeError("tensor dimensions must be positive, got " + to_string(shape));
  }
}

template <typename F>
Tensor map(const Tensor& a, F f) {
  Tensor out = a;
  for (auto& x : out.data()) x = f(x);
  return out;
}

template <typename F>
Tensor zip(const Tensor& a, const Tensor& b, const char* op, F f) {
  require_same_shape(a, b, op);
  Tensor out = a;
  auto o = out.data();
  auto bd = b.data();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] = f(o[i], bd[i]);
  return out;
}

}  // namespace

Tensor::Tensor(Shape shape, double fill) : shape_(std::move(shape)) {
  check_shape(shape_);
  data_.assign(element_count(shape_), fill);
}

Tensor::Tensor(Shape shape, std::vector<double> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
  check_shape(shape_);
  if (data_.size() != element_count(shape_)) {
    throw ShapeError("data length " + std::to_string(data_.size()) + " does not match shape " +
                     to_string(shape_));
  }
}

Tensor::Tensor(std::initializer_list<double> values)
    : Tensor(Shape{values.size()}, std::vector<double>(values)) {}

bool Tensor::all_finite() const noexcept {
  return std::all_of(data_.begin(), data_.end(), [](double x) { return std::isfinite(x); });
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape() != b.shape()) {
    throw ShapeError(std::string(op) + ": shape mismatch " + to_string(a.shape()) + " vs " +
                     to_string(b.shape()));
  }
}

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

Tensor hadamard(const Tensor& a, const Tensor& b) {
  return zip(a, b, "hadamard", [](double x, double y) { return x * y; });
}

Tensor hadamard_exp(const Tensor& a) {
  return map(a, [](double x) { return std::exp(x); });
}

Tensor sigmoid(const Tensor& a) {
  return map(a, [](double x) { return sigmoid(x); });
}

double elem_max_scalar(const Tensor& a) {
  if (a.empty()) throw ShapeError("elem_max_scalar: empty tensor");
  return *std::max_element(a.data().begin(), a.data().end());
}

Tensor add(const Tensor& a, const Tensor& b) {
  return zip(a, b, "add", std::plus<>());
}

Tensor sub(const Tensor& a, const Tensor& b) {
  return zip(a, b, "sub", std::minus<>());
}

Tensor scale(const Tensor& a, double s) {
  return map(a, [s](double x) { return s * x; });
}

Tensor abs(const Tensor& a) {
  return map(a, [](double x) { return std::fabs(x); });
}

Tensor square(const Tensor& a) {
  return map(a, [](double x) { return x * x; });
}

Tensor sqrt(const Tensor& a) {
  return map(a, [](double x) { return std::sqrt(x); });
}

Tensor elementwise_max(const Tensor& a, const Tensor& b) {
  return zip(a, b, "elementwise_max", [](double x, double y) { return std::max(x, y); });
}

Tensor fill(const Shape& shape, double value) { return Tensor(shape, value); }

Tensor zeros_like(const Tensor& a) { return Tensor(a.shape(), 0.0); }

}  // namespace expadam
