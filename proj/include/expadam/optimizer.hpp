#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "expadam/tensor.hpp"

namespace expadam {

enum class Variant { SGD, Adam, AMSGrad, DiffGrad, DGrad, Cos, Exp, ExpLR };

/// Span of the max() used when normalizing the gradient-difference term.
enum class NormScope { PerTensor, Global };

/// What the running average compared against the gradient tracks: the
/// squared gradient (same recurrence as the second moment) or the gradient.
enum class AvgMode { SquaredGrad, Grad };

std::string_view to_string(Variant v);
std::string_view to_string(NormScope s);
std::string_view to_string(AvgMode m);
std::optional<Variant> parse_variant(std::string_view name);
std::optional<NormScope> parse_norm_scope(std::string_view name);
std::optional<AvgMode> parse_avg_mode(std::string_view name);
const std::vector<Variant>& all_variants();

struct OptimizerConfig {
  Variant variant = Variant::Adam;
  double lambda = 1e-3;
  double rho1 = 0.9;
  double rho2 = 0.999;
  double epsilon = 1e-8;
  double k = 4.0;          // Exp scaling factor
  std::int64_t steps = 30; // Cos period, in optimizer steps
  double eps_div = 1e-12;  // guard for max-normalization denominators
  NormScope norm_scope = NormScope::PerTensor;
  AvgMode avg_mode = AvgMode::SquaredGrad;

  /// Throws std::invalid_argument on the first violated range constraint.
  void validate() const;

  friend bool operator==(const OptimizerConfig&, const OptimizerConfig&) = default;
};

/// Per-parameter optimizer memory. Every tensor is shaped like the parameter.
struct ParamState {
  Tensor m;       // first moment
  Tensor u;       // second moment
  Tensor avg;     // running average compared against g by DGrad-family rules
  Tensor u_max;   // AMSGrad running max of u
  Tensor g_prev;  // previous gradient for diffGrad

  static ParamState zeros(const Shape& shape);
  friend bool operator==(const ParamState&, const ParamState&) = default;
};

struct OptimizerState {
  std::int64_t t = 0;
  std::map<std::string, ParamState> params;

  friend bool operator==(const OptimizerState&, const OptimizerState&) = default;
};

using TensorMap = std::map<std::string, Tensor>;

struct StepReport {
  TensorMap xi;                // modulator actually applied, per parameter
  TensorMap effective_update;  // theta_t - theta_{t-1}
  double lr_scalar = 1.0;      // Cos cyclic rate, 1.0 for every other variant
};

class OptimizerError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

// Building blocks. These are pure; `t` is the 1-based index of the step being
// taken.

Tensor ema_update(const Tensor& prev, const Tensor& g, double rho);
Tensor bias_correct(const Tensor& x, double rho, std::int64_t t);
Tensor delta_ag(const Tensor& g, const Tensor& avg);
/// d / max(max_elem(d), eps_div).
Tensor normalize_delta(const Tensor& d, const OptimizerConfig& cfg);
/// d / max(denominator, eps_div); used for Global scope where the max spans
/// several tensors.
Tensor normalize_by(const Tensor& d, double denominator, double eps_div);
/// Cyclic multiplier of the Cos rule, in [1, 2].
double cyclic_rate(std::int64_t t, std::int64_t steps);
/// Exp modulator: 1.5 * lr / max(lr) with lr = k*dag * exp(-k*dag).
Tensor exp_xi(const Tensor& dag, const OptimizerConfig& cfg);
/// ExpLR modulator: 1.5 * lr / max(lr) * Sig(2 * dag_hat), lr = dag * exp(-dag).
Tensor explr_xi(const Tensor& dag, const Tensor& dag_hat, const OptimizerConfig& cfg);

// Single-parameter update rules. Each mutates `state` for step `t` and
// returns the new parameter value. The multi-parameter Optimizer::step owns
// the step counter.

Tensor sgd_step(const Tensor& theta, const Tensor& g, const OptimizerConfig& cfg);
Tensor adam_step(const Tensor& theta, const Tensor& g, ParamState& state, std::int64_t t,
                 const OptimizerConfig& cfg);
Tensor amsgrad_step(const Tensor& theta, const Tensor& g, ParamState& state, std::int64_t t,
                    const OptimizerConfig& cfg);
Tensor diffgrad_step(const Tensor& theta, const Tensor& g, ParamState& state, std::int64_t t,
                     const OptimizerConfig& cfg);
Tensor dgrad_step(const Tensor& theta, const Tensor& g, ParamState& state, std::int64_t t,
                  const OptimizerConfig& cfg);
Tensor cos_step(const Tensor& theta, const Tensor& g, ParamState& state, std::int64_t t,
                const OptimizerConfig& cfg);
Tensor exp_step(const Tensor& theta, const Tensor& g, ParamState& state, std::int64_t t,
                const OptimizerConfig& cfg);
Tensor explr_step(const Tensor& theta, const Tensor& g, ParamState& state, std::int64_t t,
                  const OptimizerConfig& cfg);

/// Stateful optimizer over a named set of parameter tensors.
class Optimizer {
public:
  explicit Optimizer(OptimizerConfig cfg);
  Optimizer(OptimizerConfig cfg, OptimizerState state);

  /// Applies one update to every parameter. The first call fixes the
  /// parameter names and shapes; later calls must match them.
  StepReport step(TensorMap& params, const TensorMap& grads);

  const OptimizerConfig& config() const noexcept { return cfg_; }
  const OptimizerState& state() const noexcept { return state_; }

private:
  OptimizerConfig cfg_;
  OptimizerState state_;
};

}  // namespace expadam
