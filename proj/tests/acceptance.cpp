// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any fail.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "expadam/cli.hpp"
#include "expadam/ensemble.hpp"
#include "expadam/harness.hpp"
#include "expadam/metrics.hpp"
#include "expadam/optimizer.hpp"
#include "expadam/problems.hpp"
#include "expadam/rng.hpp"
#include "metric_oracle.hpp"
#include "reference_optimizer.hpp"

using namespace expadam;

namespace {

constexpr double kSig2 = 0.8807970779778823;
constexpr double kSig4 = 0.9820137900379085;

struct Outcome {
  bool pass = true;
  std::string detail;

  void require(bool ok, const std::string& why) {
    if (!ok && pass) detail = why;
    pass = pass && ok;
  }
};

std::string fmt(const char* f, double a, double b = 0, double c = 0) {
  char buf[200];
  std::snprintf(buf, sizeof buf, f, a, b, c);
  return buf;
}

OptimizerConfig with_variant(Variant v) {
  OptimizerConfig c;
  c.variant = v;
  return c;
}

Tensor random_gradient(Rng& rng, std::size_t n) {
  Tensor g(Shape{n});
  const double scale = std::pow(10.0, rng.uniform(-3, 2));
  for (auto& v : g.data()) v = scale * rng.normal();
  return g;
}

Outcome optimizer_oracle() {
  Outcome o;
  double worst = 0;
  for (Variant v : all_variants()) {
    const OptimizerConfig cfg = with_variant(v);
    Optimizer opt(cfg);
    Rng rng(1000 + static_cast<int>(v));
    TensorMap p{{"w", Tensor(Shape{5})}};
    for (auto& x : p["w"].data()) x = rng.normal();
    reference::Config rc;
    rc.lr = cfg.lambda;
    rc.period = cfg.steps;
    reference::Params ref{p["w"].values()};
    reference::State rs(ref);
    for (int t = 0; t < 100; ++t) {
      const Tensor g = random_gradient(rng, 5);
      opt.step(p, {{"w", g}});
      reference::step(static_cast<reference::Rule>(static_cast<int>(v)), rc, ref, {g.values()}, rs);
      for (std::size_t i = 0; i < 5; ++i) worst = std::max(worst, std::fabs(p["w"][i] - ref[0][i]));
    }
  }
  o.require(worst <= 1e-12, fmt("max deviation %.3g", worst));
  o.detail = o.pass ? fmt("max deviation %.3g over 8 variants", worst) : o.detail;
  return o;
}

Tensor normal_gradient(Rng& rng, std::size_t n) {
  Tensor g(Shape{n});
  for (auto& v : g.data()) v = rng.normal();
  return g;
}

Outcome xi_ranges() {
  Outcome o;
  int peak_checks = 0;
  for (Variant v : all_variants()) {
    const OptimizerConfig cfg = with_variant(v);
    Optimizer opt(cfg);
    Rng rng(500 + static_cast<int>(v));
    TensorMap p{{"w", Tensor(Shape{8})}};
    for (int t = 0; t < 10000; ++t) {
      const Tensor g = normal_gradient(rng, 8);
      const auto r = opt.step(p, {{"w", g}});
      const Tensor& xi = r.xi.at("w");
      for (double x : xi.data()) {
        bool ok = true;
        switch (v) {
          case Variant::DiffGrad: ok = x > 0.0 && x < 1.0; break;
          case Variant::DGrad: ok = x >= 0.5 && x <= kSig4; break;
          case Variant::Cos: ok = x >= 0.5 && x < 1.0; break;
          case Variant::Exp: ok = x >= 0.0 && x <= 1.5; break;
          case Variant::ExpLR: ok = x >= 0.0 && x <= 1.5 * kSig2; break;
          default: ok = x == 1.0;
        }
        o.require(ok, std::string(to_string(v)) + fmt(" xi %.17g out of range", x));
      }
      if (v == Variant::Exp) {
        const Tensor& avg = opt.state().params.at("w").avg;
        double best = -1;
        std::size_t arg = 0;
        for (std::size_t i = 0; i < 8; ++i) {
          const double d = cfg.k * std::fabs(g[i] - avg[i]);
          const double lr = d * std::exp(-d);
          if (lr > best) best = lr, arg = i;
        }
        if (best >= cfg.eps_div) {
          ++peak_checks;
          o.require(xi[arg] == 1.5, fmt("exp peak xi %.17g", xi[arg]));
        }
      }
    }
  }
  if (o.pass) o.detail = fmt("80000 steps, %g exact exp peaks", peak_checks);
  return o;
}

Outcome adam_first_step() {
  Outcome o;
  Rng rng(3);
  double worst = 0;
  for (int trial = 0; trial < 100; ++trial) {
    Optimizer opt(with_variant(Variant::Adam));
    Tensor g(Shape{4});
    for (auto& x : g.data()) x = (rng.uniform() < 0.5 ? -1 : 1) * std::pow(10.0, rng.uniform(-3, 3));
    TensorMap p{{"w", Tensor(Shape{4})}};
    const auto r = opt.step(p, {{"w", g}});
    for (std::size_t i = 0; i < 4; ++i) {
      const double want = 1e-3 * std::fabs(g[i]) / (std::fabs(g[i]) + 1e-8);
      worst = std::max(worst, std::fabs(std::fabs(r.effective_update.at("w")[i]) - want));
    }
  }
  o.require(worst <= 1e-9, fmt("max deviation %.3g", worst));
  if (o.pass) o.detail = fmt("max deviation %.3g", worst);
  return o;
}

Outcome gradient_checks() {
  Outcome o;
  Rng rng(4);
  double worst = 0;
  auto check = [&](const Problem& p, const TensorMap& at, Batch batch, const char* name, double h) {
    const double e = finite_diff_check(p, at, batch, h);
    worst = std::max(worst, e);
    o.require(e <= 1e-5, std::string(name) + fmt(" rel err %.3g", e));
  };
  auto q = quadratic_problem(10, 100.0);
  check(*q, q->initial_params(rng), {}, "quadratic", 1e-5);
  auto rb = rosenbrock_problem();
  check(*rb, {{"xy", Tensor{0, 0}}}, {}, "rosenbrock", 1e-5);
  check(*rb, {{"xy", Tensor{-1.2, 1}}}, {}, "rosenbrock", 1e-5);
  const Dataset d = blobs_dataset(4);
  std::vector<std::size_t> batch(30);
  for (auto& r : batch) r = rng.below(d.size());
  LogRegProblem lr(d);
  check(lr, lr.initial_params(rng), batch, "logreg", 1e-3);
  MlpProblem mlp(d, 16);
  check(mlp, mlp.initial_params(rng), batch, "mlp", 1e-3);
  if (o.pass) o.detail = fmt("max relative error %.3g", worst);
  return o;
}

Outcome convergence() {
  Outcome o;
  std::string summary;
  auto final_loss = [](const Problem& p, Variant v, double lambda, int steps, TensorMap params) {
    OptimizerConfig cfg = with_variant(v);
    cfg.lambda = lambda;
    Optimizer opt(cfg);
    for (int t = 0; t < steps; ++t) opt.step(params, p.grad(params, {}));
    return p.loss(params, {});
  };
  auto q = quadratic_problem(10, 100.0);
  Rng rng(5);
  const TensorMap start = q->initial_params(rng);
  for (Variant v : {Variant::Adam, Variant::Exp, Variant::ExpLR}) {
    const double loss = final_loss(*q, v, 0.01, 2000, start);
    summary += " quadratic/" + std::string(to_string(v)) + fmt("=%.3g", loss);
    o.require(loss <= 1e-6, "quadratic " + std::string(to_string(v)) + fmt(" loss %.3g > 1e-6", loss));
  }
  auto rb = rosenbrock_problem();
  const double loss = final_loss(*rb, Variant::Adam, 0.001, 50000, rb->initial_params(rng));
  summary += fmt(" rosenbrock/adam=%.3g", loss);
  o.require(loss <= 1e-2, fmt("rosenbrock loss %.3g > 1e-2", loss));
  o.detail = o.pass ? summary.substr(1) : o.detail + ";" + summary;
  return o;
}

Outcome metric_oracle_suite() {
  Outcome o;
  Rng rng(6);
  double worst = 0;
  for (int inst = 0; inst < 1000; ++inst) {
    const std::size_t n = 1 + rng.below(50), c = 2 + rng.below(5);
    std::vector<int> truth(n), pred(n);
    std::vector<double> probs(n * c, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      truth[i] = static_cast<int>(rng.below(c));
      pred[i] = static_cast<int>(rng.below(c));
      probs[i * c + static_cast<std::size_t>(pred[i])] = 1.0;
    }
    const ProbabilityMatrix pm(n, c, std::move(probs));
    const auto cm = confusion(pm, truth);
    const auto want = metric_oracle::score(truth, pred, static_cast<int>(c));
    worst = std::max({worst, std::fabs(cm.accuracy() - want.accuracy), std::fabs(cm.weighted_f_score() - want.f),
                      std::fabs(cm.weighted_g_mean() - want.g)});
  }
  o.require(worst <= 1e-12, fmt("max deviation %.3g", worst));
  ConfusionMatrix hand(2);
  for (int i = 0; i < 3; ++i) hand.add(0, 0);
  hand.add(1, 0);
  o.require(std::fabs(hand.weighted_f_score() - 0.6428571428571429) <= 1e-15,
            fmt("hand F %.17g", hand.weighted_f_score()));
  o.require(hand.weighted_g_mean() == 0.0, fmt("hand G %.17g", hand.weighted_g_mean()));
  if (o.pass) o.detail = fmt("max deviation %.3g; hand F=%.6f G=%g", worst, hand.weighted_f_score(), hand.weighted_g_mean());
  return o;
}

Outcome fusion_laws() {
  Outcome o;
  Rng rng(7);
  double worst_eq = 0, worst_scale = 0;
  for (int inst = 0; inst < 200; ++inst) {
    const std::size_t n = 1 + rng.below(20), c = 2 + rng.below(5), m = 1 + rng.below(10);
    std::vector<ProbabilityMatrix> members;
    for (std::size_t k = 0; k < m; ++k) {
      std::vector<double> v(n * c);
      for (std::size_t i = 0; i < n; ++i) {
        double s = 0;
        for (std::size_t j = 0; j < c; ++j) s += (v[i * c + j] = rng.uniform() + 1e-3);
        for (std::size_t j = 0; j < c; ++j) v[i * c + j] /= s;
      }
      members.emplace_back(n, c, std::move(v));
    }
    const std::vector<ProbabilityMatrix> same(m, members[0]);
    o.require(fuse_average(same).values() == members[0].values(), "idempotence broken");

    const auto avg = fuse_average(members);
    const double w = rng.uniform(0.1, 10);
    const auto eq = fuse_weighted_sum(members, std::vector<double>(m, w));
    std::vector<double> weights(m), scaled(m);
    const double factor = rng.uniform(1e-3, 1e3);
    for (std::size_t k = 0; k < m; ++k) scaled[k] = factor * (weights[k] = rng.uniform(0.01, 5));
    const auto a = fuse_weighted_sum(members, weights), b = fuse_weighted_sum(members, scaled);
    for (std::size_t i = 0; i < avg.values().size(); ++i) {
      worst_eq = std::max(worst_eq, std::fabs(eq.values()[i] - avg.values()[i]));
      worst_scale = std::max(worst_scale, std::fabs(a.values()[i] - b.values()[i]));
    }
    for (std::size_t i = 0; i < n; ++i) o.require(a.argmax(i) == b.argmax(i), "rescaling changed an argmax");
  }
  o.require(worst_eq <= 1e-15, fmt("equal-weight deviation %.3g", worst_eq));
  o.require(worst_scale <= 1e-15, fmt("rescale deviation %.3g", worst_scale));
  if (o.pass) o.detail = fmt("equal-weight dev %.3g, rescale dev %.3g", worst_eq, worst_scale);
  return o;
}

const std::vector<std::string> kEnsembleCommand{"--task",  "blobs", "--optimizer", "exp,explr", "--runs", "10",
                                                "--seed",  "7",     "--epochs",    "200",       "--no-timing"};

Outcome ensemble_benefit() {
  Outcome o;
  const ExperimentConfig cfg = parse_cli(kEnsembleCommand);
  const MetricsReport report = run_ensemble(cfg);
  const auto task = make_task(cfg);
  const auto& labels = task.test->labels;

  std::vector<ProbabilityMatrix> all;
  std::string summary;
  double fused_single[2] = {0, 0};
  for (int v = 0; v < 2; ++v) {
    std::vector<ProbabilityMatrix> group;
    double mean = 0;
    for (const auto& r : report.runs) {
      if (r.variant != cfg.variants[v]) continue;
      group.push_back(*r.test_probs);
      all.push_back(*r.test_probs);
      mean += accuracy(*r.test_probs, labels);
    }
    mean /= static_cast<double>(group.size());
    fused_single[v] = accuracy(fuse_average(group), labels);
    const std::string name(to_string(cfg.variants[v]));
    summary += name + fmt(" ens=%.4f mean=%.4f; ", fused_single[v], mean);
    o.require(fused_single[v] >= mean - 0.005, name + fmt(" ensemble %.4f < member mean %.4f - 0.005", fused_single[v], mean));
  }
  const double combined = accuracy(fuse_average(all), labels);
  summary += fmt("ens_new=%.4f", combined);
  for (double f : fused_single)
    o.require(combined >= f - 0.005, fmt("combined %.4f < 10-run fusion %.4f - 0.005", combined, f));
  o.detail = o.pass ? summary : o.detail + "; " + summary;
  return o;
}

Outcome determinism() {
  Outcome o;
  std::ostringstream a, b, ea, eb;
  const int ca = run_cli(kEnsembleCommand, a, ea);
  const int cb = run_cli(kEnsembleCommand, b, eb);
  o.require(ca == 0 && cb == 0, fmt("exit codes %g, %g", ca, cb));
  o.require(!a.str().empty() && a.str() == b.str(), "CSV bytes differ");
  if (o.pass) o.detail = fmt("%g identical bytes", static_cast<double>(a.str().size()));
  return o;
}

Outcome cyclic_periodicity() {
  Outcome o;
  double worst = 0, lo = 2, hi = 1;
  for (std::int64_t t = 1; t <= 300; ++t) {
    const double a = cyclic_rate(t, 30), b = cyclic_rate(t + 30, 30);
    worst = std::max(worst, std::fabs(a - b));
    lo = std::min({lo, a, b});
    hi = std::max({hi, a, b});
  }
  o.require(worst <= 1e-12, fmt("period deviation %.3g", worst));
  o.require(lo >= 1.0 && hi <= 2.0, fmt("range [%.6f, %.6f]", lo, hi));
  if (o.pass) o.detail = fmt("period dev %.3g, range [%.6f, %.6f]", worst, lo, hi);
  return o;
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
      {"optimizer oracle", optimizer_oracle},     {"xi ranges", xi_ranges},
      {"adam first step", adam_first_step},       {"gradient checks", gradient_checks},
      {"convergence", convergence},               {"metric oracle", metric_oracle_suite},
      {"fusion laws", fusion_laws},               {"ensemble benefit", ensemble_benefit},
      {"determinism", determinism},               {"cyclic rate", cyclic_periodicity}};

  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail = std::string("exception: ") + e.what();
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    failures += !o.pass;
    std::printf("[%s] %2zu %-17s %7.2fs  %s\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first, secs,
                o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failures, criteria.size());
  return failures == 0 ? 0 : 1;
}
