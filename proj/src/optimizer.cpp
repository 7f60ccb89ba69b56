#include "expadam/optimizer.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <span>

namespace expadam {

namespace {

constexpr std::array<std::pair<Variant, std::string_view>, 8> kVariantNames{{
    {Variant::SGD, "sgd"},
    {Variant::Adam, "adam"},
    {Variant::AMSGrad, "amsgrad"},
    {Variant::DiffGrad, "diffgrad"},
    {Variant::DGrad, "dgrad"},
    {Variant::Cos, "cos"},
    {Variant::Exp, "exp"},
    {Variant::ExpLR, "explr"},
}};

// Fixed constants of the modulator formulas.
constexpr double kDGradGain = 4.0;
constexpr double kExpPeak = 1.5;
constexpr double kExpLRGain = 2.0;
constexpr double kCosFloor = 9e-4;

bool uses_gradient_average(Variant v) {
  return v == Variant::DGrad || v == Variant::Cos || v == Variant::Exp || v == Variant::ExpLR;
}

struct Slot {
  const Tensor* theta;
  const Tensor* g;
  ParamState* state;
  Tensor dag;  // |g - avg| for the DGrad family, |g_prev - g| for diffGrad
  Tensor xi;
  Tensor theta_new;
};

double max_over(std::span<const Tensor> tensors) {
  double m = -INFINITY;
  for (const auto& t : tensors) m = std::max(m, elem_max_scalar(t));
  return m;
}

// Normalizes each tensor by its own max, or by the max over all of them.
std::vector<Tensor> normalize_scoped(const std::vector<Tensor>& values, const OptimizerConfig& cfg) {
  std::vector<Tensor> out;
  out.reserve(values.size());
  if (cfg.norm_scope == NormScope::Global) {
    const double denom = max_over(values);
    for (const auto& v : values) out.push_back(normalize_by(v, denom, cfg.eps_div));
  } else {
    for (const auto& v : values) out.push_back(normalize_delta(v, cfg));
  }
  return out;
}

Tensor exp_rate(const Tensor& dag, double k) {
  // (k * dag) o e^(-k * dag)
  return hadamard(scale(dag, k), hadamard_exp(scale(dag, -k)));
}

Tensor peak_normalize(const Tensor& lr, double denom, double eps_div) {
  // Normalizing first keeps the max-attaining element at exactly 1.5.
  return scale(normalize_by(lr, denom, eps_div), kExpPeak);
}

std::vector<Tensor> modulators(Variant v, std::vector<Slot>& slots, std::int64_t t,
                               const OptimizerConfig& cfg, double& lr_scalar) {
  std::vector<Tensor> xi;
  xi.reserve(slots.size());
  std::vector<Tensor> dags;
  for (auto& s : slots) dags.push_back(s.dag);

  switch (v) {
    case Variant::SGD:
    case Variant::Adam:
    case Variant::AMSGrad:
      for (auto& s : slots) xi.push_back(fill(s.theta->shape(), 1.0));
      break;
    case Variant::DiffGrad:
      for (auto& d : dags) xi.push_back(sigmoid(d));
      break;
    case Variant::DGrad:
      for (auto& n : normalize_scoped(dags, cfg)) xi.push_back(sigmoid(scale(n, kDGradGain)));
      break;
    case Variant::Cos: {
      lr_scalar = cyclic_rate(t, cfg.steps);
      for (auto& n : normalize_scoped(dags, cfg))
        xi.push_back(sigmoid(scale(n, kDGradGain * lr_scalar)));
      break;
    }
    case Variant::Exp:
    case Variant::ExpLR: {
      const double k = v == Variant::Exp ? cfg.k : 1.0;
      std::vector<Tensor> rates;
      for (auto& d : dags) rates.push_back(exp_rate(d, k));
      const double global = cfg.norm_scope == NormScope::Global ? max_over(rates) : 0.0;
      std::vector<Tensor> dag_hat;
      if (v == Variant::ExpLR) dag_hat = normalize_scoped(dags, cfg);
      for (std::size_t i = 0; i < rates.size(); ++i) {
        const double denom =
            cfg.norm_scope == NormScope::Global ? global : elem_max_scalar(rates[i]);
        Tensor lr_hat = peak_normalize(rates[i], denom, cfg.eps_div);
        if (v == Variant::ExpLR) lr_hat = hadamard(lr_hat, sigmoid(scale(dag_hat[i], kExpLRGain)));
        xi.push_back(std::move(lr_hat));
      }
      break;
    }
  }
  return xi;
}

void apply_rule(Variant v, std::vector<Slot>& slots, std::int64_t t, const OptimizerConfig& cfg,
                double& lr_scalar) {
  if (t < 1) throw OptimizerError("step index must be >= 1");
  lr_scalar = 1.0;

  if (v == Variant::SGD) {
    for (auto& s : slots) {
      s.theta_new = sgd_step(*s.theta, *s.g, cfg);
      s.xi = fill(s.theta->shape(), 1.0);
    }
    return;
  }

  for (auto& s : slots) {
    ParamState& st = *s.state;
    const Tensor& g = *s.g;
    st.m = ema_update(st.m, g, cfg.rho1);
    st.u = ema_update(st.u, square(g), cfg.rho2);
    if (v == Variant::AMSGrad) st.u_max = elementwise_max(st.u_max, st.u);
    if (v == Variant::DiffGrad) {
      s.dag = abs(sub(st.g_prev, g));
      st.g_prev = g;
    } else if (uses_gradient_average(v)) {
      const Tensor tracked = cfg.avg_mode == AvgMode::SquaredGrad ? square(g) : g;
      st.avg = ema_update(st.avg, tracked, cfg.rho2);
      s.dag = delta_ag(g, st.avg);
    }
  }

  auto xi = modulators(v, slots, t, cfg, lr_scalar);

  for (std::size_t i = 0; i < slots.size(); ++i) {
    auto& s = slots[i];
    const ParamState& st = *s.state;
    const Tensor m_hat = bias_correct(st.m, cfg.rho1, t);
    const Tensor second = v == Variant::AMSGrad ? st.u_max : bias_correct(st.u, cfg.rho2, t);
    Tensor out = *s.theta;
    auto o = out.data();
    auto mh = m_hat.data();
    auto sd = second.data();
    auto x = xi[i].data();
    for (std::size_t j = 0; j < o.size(); ++j) {
      o[j] -= cfg.lambda * x[j] * mh[j] / (std::sqrt(sd[j]) + cfg.epsilon);
    }
    s.theta_new = std::move(out);
    s.xi = std::move(xi[i]);
  }
}

Tensor single_step(Variant v, const Tensor& theta, const Tensor& g, ParamState& state,
                   std::int64_t t, const OptimizerConfig& cfg) {
  require_same_shape(theta, g, to_string(v).data());
  require_same_shape(theta, state.m, to_string(v).data());
  if (!g.all_finite()) throw OptimizerError("non-finite gradient");
  std::vector<Slot> slots{Slot{&theta, &g, &state, {}, {}, {}}};
  double lr = 1.0;
  apply_rule(v, slots, t, cfg, lr);
  return std::move(slots.front().theta_new);
}

}  // namespace

std::string_view to_string(Variant v) {
  for (const auto& [variant, name] : kVariantNames)
    if (variant == v) return name;
  return "unknown";
}

std::string_view to_string(NormScope s) {
  return s == NormScope::PerTensor ? "per-tensor" : "global";
}

std::string_view to_string(AvgMode m) { return m == AvgMode::SquaredGrad ? "squared-grad" : "grad"; }

std::optional<Variant> parse_variant(std::string_view name) {
  for (const auto& [variant, n] : kVariantNames)
    if (n == name) return variant;
  return std::nullopt;
}

std::optional<NormScope> parse_norm_scope(std::string_view name) {
  if (name == "per-tensor") return NormScope::PerTensor;
  if (name == "global") return NormScope::Global;
  return std::nullopt;
}

std::optional<AvgMode> parse_avg_mode(std::string_view name) {
  if (name == "squared-grad") return AvgMode::SquaredGrad;
  if (name == "grad") return AvgMode::Grad;
  return std::nullopt;
}

const std::vector<Variant>& all_variants() {
  static const std::vector<Variant> variants = [] {
    std::vector<Variant> v;
    for (const auto& entry : kVariantNames) v.push_back(entry.first);
    return v;
  }();
  return variants;
}

void OptimizerConfig::validate() const {
  auto fail = [](const std::string& msg) { throw std::invalid_argument(msg); };
  if (!(rho1 >= 0.0 && rho1 < 1.0)) fail("rho1 must satisfy 0 <= rho1 < 1");
  if (!(rho2 >= 0.0 && rho2 < 1.0)) fail("rho2 must satisfy 0 <= rho2 < 1");
  if (!(lambda > 0.0) || !std::isfinite(lambda)) fail("lambda must be > 0");
  if (!(epsilon > 0.0)) fail("epsilon must be > 0");
  if (!(k > 0.0) || !std::isfinite(k)) fail("k must be > 0");
  if (steps < 1) fail("steps must be >= 1");
  if (!(eps_div > 0.0)) fail("eps_div must be > 0");
}

ParamState ParamState::zeros(const Shape& shape) {
  Tensor z(shape, 0.0);
  return ParamState{z, z, z, z, z};
}

Tensor ema_update(const Tensor& prev, const Tensor& g, double rho) {
  require_same_shape(prev, g, "ema_update");
  if (!(rho >= 0.0 && rho < 1.0)) throw std::invalid_argument("ema_update: rho must be in [0, 1)");
  Tensor out = prev;
  auto o = out.data();
  auto gd = g.data();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] = rho * o[i] + (1.0 - rho) * gd[i];
  return out;
}

Tensor bias_correct(const Tensor& x, double rho, std::int64_t t) {
  if (t < 1) throw std::invalid_argument("bias_correct: t must be >= 1");
  if (!(rho >= 0.0 && rho < 1.0)) throw std::invalid_argument("bias_correct: rho must be in [0, 1)");
  const double factor = 1.0 - std::pow(rho, static_cast<double>(t));
  Tensor out = x;
  for (auto& v : out.data()) v /= factor;
  return out;
}

Tensor delta_ag(const Tensor& g, const Tensor& avg) {
  require_same_shape(g, avg, "delta_ag");
  return abs(sub(g, avg));
}

Tensor normalize_by(const Tensor& d, double denominator, double eps_div) {
  const double denom = std::max(denominator, eps_div);
  Tensor out = d;
  for (auto& v : out.data()) v /= denom;
  return out;
}

Tensor normalize_delta(const Tensor& d, const OptimizerConfig& cfg) {
  return normalize_by(d, elem_max_scalar(d), cfg.eps_div);
}

double cyclic_rate(std::int64_t t, std::int64_t steps) {
  if (t < 1 || steps < 1) throw std::invalid_argument("cyclic_rate: t and steps must be >= 1");
  const double phase = std::numbers::pi * static_cast<double>(t) / static_cast<double>(steps);
  const double decay = std::exp(-0.01 * static_cast<double>(t % steps + 1));
  double lr = 2.0 - std::fabs(std::cos(phase)) * decay;
  // Unreachable floor kept from the original rule: lr never drops below 1.
  if (lr < kCosFloor) lr = kCosFloor;
  return lr;
}

Tensor exp_xi(const Tensor& dag, const OptimizerConfig& cfg) {
  const Tensor lr = exp_rate(dag, cfg.k);
  return peak_normalize(lr, elem_max_scalar(lr), cfg.eps_div);
}

Tensor explr_xi(const Tensor& dag, const Tensor& dag_hat, const OptimizerConfig& cfg) {
  require_same_shape(dag, dag_hat, "explr_xi");
  const Tensor lr = exp_rate(dag, 1.0);
  const Tensor lr_hat = peak_normalize(lr, elem_max_scalar(lr), cfg.eps_div);
  return hadamard(lr_hat, sigmoid(scale(dag_hat, kExpLRGain)));
}

Tensor sgd_step(const Tensor& theta, const Tensor& g, const OptimizerConfig& cfg) {
  require_same_shape(theta, g, "sgd_step");
  if (!g.all_finite()) throw OptimizerError("non-finite gradient");
  Tensor out = theta;
  auto o = out.data();
  auto gd = g.data();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] -= cfg.lambda * gd[i];
  return out;
}

Tensor adam_step(const Tensor& theta, const Tensor& g, ParamState& state, std::int64_t t,
                 const OptimizerConfig& cfg) {
  return single_step(Variant::Adam, theta, g, state, t, cfg);
}

Tensor amsgrad_step(const Tensor& theta, const Tensor& g, ParamState& state, std::int64_t t,
                    const OptimizerConfig& cfg) {
  return single_step(Variant::AMSGrad, theta, g, state, t, cfg);
}

Tensor diffgrad_step(const Tensor& theta, const Tensor& g, ParamState& state, std::int64_t t,
                     const OptimizerConfig& cfg) {
  return single_step(Variant::DiffGrad, theta, g, state, t, cfg);
}

Tensor dgrad_step(const Tensor& theta, const Tensor& g, ParamState& state, std::int64_t t,
                  const OptimizerConfig& cfg) {
  return single_step(Variant::DGrad, theta, g, state, t, cfg);
}

Tensor cos_step(const Tensor& theta, const Tensor& g, ParamState& state, std::int64_t t,
                const OptimizerConfig& cfg) {
  return single_step(Variant::Cos, theta, g, state, t, cfg);
}

Tensor exp_step(const Tensor& theta, const Tensor& g, ParamState& state, std::int64_t t,
                const OptimizerConfig& cfg) {
  return single_step(Variant::Exp, theta, g, state, t, cfg);
}

Tensor explr_step(const Tensor& theta, const Tensor& g, ParamState& state, std::int64_t t,
                  const OptimizerConfig& cfg) {
  return single_step(Variant::ExpLR, theta, g, state, t, cfg);
}

Optimizer::Optimizer(OptimizerConfig cfg) : cfg_(cfg) { cfg_.validate(); }

Optimizer::Optimizer(OptimizerConfig cfg, OptimizerState state)
    : cfg_(cfg), state_(std::move(state)) {
  cfg_.validate();
  if (state_.t < 0) throw std::invalid_argument("optimizer state has negative step counter");
}

StepReport Optimizer::step(TensorMap& params, const TensorMap& grads) {
  if (params.empty()) throw OptimizerError("step: empty parameter set");
  if (grads.size() != params.size()) throw OptimizerError("step: parameter/gradient count mismatch");

  for (const auto& [name, theta] : params) {
    auto g = grads.find(name);
    if (g == grads.end()) throw OptimizerError("step: missing gradient for parameter '" + name + "'");
    if (theta.shape() != g->second.shape()) {
      throw OptimizerError("step: gradient shape " + to_string(g->second.shape()) +
                           " does not match parameter '" + name + "' shape " +
                           to_string(theta.shape()));
    }
    if (!g->second.all_finite())
      throw OptimizerError("step: non-finite gradient for parameter '" + name + "'");
  }

  if (state_.params.empty()) {
    for (const auto& [name, theta] : params) state_.params.emplace(name, ParamState::zeros(theta.shape()));
  } else {
    if (state_.params.size() != params.size())
      throw OptimizerError("step: parameter set changed between calls");
    for (const auto& [name, theta] : params) {
      auto it = state_.params.find(name);
      if (it == state_.params.end()) throw OptimizerError("step: unknown parameter '" + name + "'");
      if (it->second.m.shape() != theta.shape())
        throw OptimizerError("step: shape of parameter '" + name + "' changed between calls");
    }
  }

  std::vector<Slot> slots;
  slots.reserve(params.size());
  for (auto& [name, theta] : params) {
    slots.push_back(Slot{&theta, &grads.at(name), &state_.params.at(name), {}, {}, {}});
  }

  const std::int64_t t = state_.t + 1;
  StepReport report;
  apply_rule(cfg_.variant, slots, t, cfg_, report.lr_scalar);
  state_.t = t;

  std::size_t i = 0;
  for (auto& [name, theta] : params) {
    auto& s = slots[i++];
    report.effective_update.emplace(name, sub(s.theta_new, theta));
    report.xi.emplace(name, std::move(s.xi));
    theta = std::move(s.theta_new);
  }
  return report;
}

}  // namespace expadam
