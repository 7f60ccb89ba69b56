#include "expadam/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <future>
#include <numeric>
#include <ostream>
#include <thread>

#include "expadam/csv.hpp"
#include "expadam/metrics.hpp"
#include "expadam/rng.hpp"

namespace expadam {

namespace {

constexpr std::size_t kQuadraticDim = 10;
constexpr double kQuadraticCondition = 100.0;
constexpr double kTrainFraction = 0.8;
// Separate stream for the split so it does not alias the data draw.
constexpr std::uint64_t kSplitSalt = 0x9e3779b97f4a7c15ULL;

MemberMetrics score(std::string label, const ProbabilityMatrix& pm, std::span<const int> labels,
                    double final_loss) {
  const auto cm = confusion(pm, labels);
  return {std::move(label), cm.accuracy(), cm.weighted_f_score(), cm.weighted_g_mean(), final_loss};
}

}  // namespace

const std::vector<std::string>& task_names() {
  static const std::vector<std::string> names{"quadratic", "rosenbrock", "blobs", "blobs-logreg"};
  return names;
}

void ExperimentConfig::validate() const {
  auto fail = [](const std::string& msg) { throw std::invalid_argument(msg); };
  if (std::find(task_names().begin(), task_names().end(), task) == task_names().end())
    fail("unknown task '" + task + "'");
  if (variants.empty()) fail("at least one optimizer is required");
  if (runs < 1) fail("runs must be >= 1");
  if (epochs < 1) fail("epochs must be >= 1");
  if (batch_size < 1) fail("batch-size must be >= 1");
  if (hidden < 1) fail("hidden must be >= 1");
  if (jobs < 1) fail("jobs must be >= 1");
  optimizer.validate();
}

Dataset blobs_dataset(std::uint64_t seed) {
  const std::vector<std::size_t> counts{120, 40, 20};
  const std::vector<std::vector<double>> centers{{0.0, 0.0}, {2.0, 0.5}, {0.5, 2.0}};
  return synth_blobs(counts, centers, 0.8, seed);
}

TaskInstance make_task(const ExperimentConfig& cfg) {
  TaskInstance task;
  if (cfg.task == "quadratic") {
    task.problem = quadratic_problem(kQuadraticDim, kQuadraticCondition);
  } else if (cfg.task == "rosenbrock") {
    task.problem = rosenbrock_problem();
  } else if (cfg.task == "blobs" || cfg.task == "blobs-logreg") {
    auto split = stratified_split(blobs_dataset(cfg.seed), kTrainFraction, cfg.seed ^ kSplitSalt);
    task.test = std::move(split.test);
    if (cfg.task == "blobs")
      task.problem = mlp_problem(std::move(split.train), cfg.hidden);
    else
      task.problem = logreg_problem(std::move(split.train));
  } else {
    throw std::invalid_argument("unknown task '" + cfg.task + "'");
  }
  return task;
}

RunResult run_training(const ExperimentConfig& cfg, const TaskInstance& task, Variant variant,
                       int run_index, int run_id) {
  cfg.validate();
  if (run_index < 0 || run_index >= cfg.runs) throw std::invalid_argument("run index out of range");

  const auto start = std::chrono::steady_clock::now();
  const Problem& problem = *task.problem;
  const ClassifierProblem* classifier = task.classifier();

  RunResult result;
  result.run_id = run_id;
  result.variant = variant;
  result.seed = cfg.seed + static_cast<std::uint64_t>(run_index);

  Rng rng(result.seed);
  TensorMap params = problem.initial_params(rng);
  OptimizerConfig ocfg = cfg.optimizer;
  ocfg.variant = variant;
  Optimizer opt(ocfg);

  const std::size_t n = problem.num_samples();
  const auto batch = static_cast<std::size_t>(cfg.batch_size);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});

  auto fail = [&](const std::string& why) -> RunFailure {
    return RunFailure("run " + std::to_string(run_id) + " (" + std::string(to_string(variant)) +
                          ", seed " + std::to_string(result.seed) + ") diverged: " + why,
                      result.records);
  };

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    if (classifier) rng.shuffle(std::span<std::size_t>(order));
    for (std::size_t b = 0; b < n; b += batch) {
      const Batch rows = classifier ? Batch(order).subspan(b, std::min(batch, n - b)) : Batch{};
      auto lg = problem.evaluate(params, rows);
      if (!std::isfinite(lg.loss)) throw fail("non-finite loss at epoch " + std::to_string(epoch));
      try {
        opt.step(params, lg.grads);
      } catch (const OptimizerError& e) {
        throw fail(e.what());
      }
      ++result.steps;
    }

    RunRecord rec;
    rec.run_id = run_id;
    rec.optimizer = std::string(to_string(variant));
    rec.task = cfg.task;
    rec.seed = result.seed;
    rec.epoch = epoch;
    rec.train_loss = problem.loss(params, {});
    if (!std::isfinite(rec.train_loss)) throw fail("non-finite loss at epoch " + std::to_string(epoch));
    if (classifier) {
      ProbabilityMatrix pm(classifier->predict_proba(params, *task.test));
      rec.eval_accuracy = accuracy(pm, task.test->labels);
    }
    if (cfg.timing) {
      rec.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
    }
    result.final_loss = rec.train_loss;
    result.records.push_back(std::move(rec));
  }

  if (classifier) result.test_probs.emplace(classifier->predict_proba(params, *task.test));
  return result;
}

RunResult run_training(const ExperimentConfig& cfg, Variant variant, int run_index) {
  const TaskInstance task = make_task(cfg);
  return run_training(cfg, task, variant, run_index, run_index);
}

MetricsReport run_ensemble(const ExperimentConfig& cfg) {
  cfg.validate();
  const TaskInstance task = make_task(cfg);

  struct Job {
    Variant variant;
    int run_index;
    int run_id;
  };
  std::vector<Job> jobs;
  for (std::size_t v = 0; v < cfg.variants.size(); ++v)
    for (int r = 0; r < cfg.runs; ++r)
      jobs.push_back({cfg.variants[v], r, static_cast<int>(v) * cfg.runs + r});

  std::vector<std::optional<RunResult>> results(jobs.size());
  std::vector<std::exception_ptr> errors(jobs.size());
  auto worker = [&](std::size_t first, std::size_t stride) {
    for (std::size_t i = first; i < jobs.size(); i += stride) {
      try {
        results[i] = run_training(cfg, task, jobs[i].variant, jobs[i].run_index, jobs[i].run_id);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const auto workers = std::min<std::size_t>(static_cast<std::size_t>(cfg.jobs), jobs.size());
  if (workers <= 1) {
    worker(0, 1);
  } else {
    std::vector<std::jthread> threads;
    for (std::size_t w = 0; w < workers; ++w) threads.emplace_back(worker, w, workers);
  }

  MetricsReport report;
  std::optional<RunFailure> failure;
  for (std::size_t i = 0; i < jobs.size(); ++i) {
    if (errors[i]) {
      try {
        std::rethrow_exception(errors[i]);
      } catch (RunFailure& f) {
        report.records.insert(report.records.end(), f.records.begin(), f.records.end());
        if (!failure) failure.emplace(f.what(), std::vector<RunRecord>{});
      }
      continue;
    }
    auto& r = *results[i];
    report.total_steps += r.steps;
    report.records.insert(report.records.end(), r.records.begin(), r.records.end());
  }
  std::stable_sort(report.records.begin(), report.records.end(), [](const auto& a, const auto& b) {
    return std::tie(a.run_id, a.epoch) < std::tie(b.run_id, b.epoch);
  });
  if (failure) throw RunFailure(failure->what(), report.records);

  for (auto& r : results) report.runs.push_back(std::move(*r));

  const ClassifierProblem* classifier = task.classifier();
  for (const auto& r : report.runs) {
    const std::string label =
        std::string(to_string(r.variant)) + "#" + std::to_string(r.run_id);
    if (classifier) {
      report.members.push_back(score(label, *r.test_probs, task.test->labels, r.final_loss));
    } else {
      report.members.push_back({label, 0.0, 0.0, 0.0, r.final_loss});
    }
  }
  if (!classifier) return report;

  auto probs_of = [&](auto pred) {
    std::vector<ProbabilityMatrix> out;
    for (const auto& r : report.runs)
      if (pred(r)) out.push_back(*r.test_probs);
    return out;
  };
  auto add_fusion = [&](std::string label, ProbabilityMatrix pm) {
    report.fusions.push_back(score(label, pm, task.test->labels, 0.0));
    report.fused_probs.emplace_back(std::move(label), std::move(pm));
  };

  for (Variant v : cfg.variants) {
    add_fusion("ens:" + std::string(to_string(v)),
               fuse_average(probs_of([v](const RunResult& r) { return r.variant == v; })));
  }
  if (cfg.variants.size() > 1) {
    add_fusion("ens:all", fuse_average(probs_of([](const RunResult&) { return true; })));
    const bool has_sgd =
        std::find(cfg.variants.begin(), cfg.variants.end(), Variant::SGD) != cfg.variants.end();
    if (has_sgd) {
      const std::vector<ProbabilityMatrix> groups{
          fuse_average(probs_of([](const RunResult& r) { return r.variant == Variant::SGD; })),
          fuse_average(probs_of([](const RunResult& r) { return r.variant != Variant::SGD; }))};
      const std::vector<double> weights{1.0, 2.0};
      add_fusion("here", fuse_weighted_sum(groups, weights));
    }
  }
  return report;
}

void emit_csv(std::span<const RunRecord> records, std::ostream& out) {
  out << kRecordHeader << '\n';
  for (const auto& r : records) {
    out << r.run_id << ',' << r.optimizer << ',' << r.task << ',' << r.seed << ',' << r.epoch << ','
        << csv::format_double(r.train_loss) << ',' << csv::format_double(r.eval_accuracy) << ','
        << csv::format_double(r.wall_ms) << '\n';
  }
}

void emit_csv(std::span<const RunRecord> records, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open '" + path.string() + "' for writing");
  emit_csv(records, out);
  if (!out) throw std::runtime_error("failed writing '" + path.string() + "'");
}

void emit_metrics_csv(const MetricsReport& report, std::ostream& out) {
  out << "kind,label,accuracy,weighted_f,weighted_g,final_loss\n";
  auto row = [&out](const char* kind, const MemberMetrics& m) {
    out << kind << ',' << m.label << ',' << csv::format_double(m.accuracy) << ','
        << csv::format_double(m.weighted_f) << ',' << csv::format_double(m.weighted_g) << ','
        << csv::format_double(m.final_loss) << '\n';
  };
  for (const auto& m : report.members) row("member", m);
  for (const auto& m : report.fusions) row("fusion", m);
}

}  // namespace expadam
