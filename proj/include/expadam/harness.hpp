#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "expadam/dataset.hpp"
#include "expadam/ensemble.hpp"
#include "expadam/optimizer.hpp"
#include "expadam/problems.hpp"

namespace expadam {

/// Built-in tasks: "quadratic" (dim 10, condition 100), "rosenbrock",
/// "blobs" (tanh MLP on imbalanced 3-class blobs) and "blobs-logreg".
const std::vector<std::string>& task_names();

struct ExperimentConfig {
  std::string task = "blobs";
  std::vector<Variant> variants{Variant::Adam};
  int runs = 1;
  int epochs = 20;
  int batch_size = 30;
  std::uint64_t seed = 0;
  std::size_t hidden = 16;
  OptimizerConfig optimizer;  // variant field is overridden per run
  std::string out;            // records CSV; empty writes to stdout
  std::string metrics_out;
  std::string probs_dir;
  bool timing = true;
  int jobs = 1;

  void validate() const;
};

struct RunRecord {
  int run_id = 0;
  std::string optimizer;
  std::string task;
  std::uint64_t seed = 0;
  int epoch = 0;
  double train_loss = 0.0;
  double eval_accuracy = 0.0;  // 0 for tasks without a test split
  double wall_ms = 0.0;
};

/// Problem instance plus held-out data for one experiment. Classification
/// tasks draw the dataset and its 80/20 stratified split from the base seed
/// so every run of an ensemble is scored on the same test rows.
struct TaskInstance {
  std::unique_ptr<Problem> problem;
  std::optional<Dataset> test;  // classification tasks only

  const ClassifierProblem* classifier() const {
    return dynamic_cast<const ClassifierProblem*>(problem.get());
  }
};

TaskInstance make_task(const ExperimentConfig& cfg);

/// Imbalanced 3-class 2-D blobs used by the "blobs" tasks.
Dataset blobs_dataset(std::uint64_t seed);

struct RunResult {
  int run_id = 0;
  Variant variant = Variant::Adam;
  std::uint64_t seed = 0;
  std::vector<RunRecord> records;
  std::optional<ProbabilityMatrix> test_probs;
  double final_loss = 0.0;
  std::int64_t steps = 0;
};

class RunFailure : public std::runtime_error {
public:
  RunFailure(const std::string& what, std::vector<RunRecord> partial)
      : std::runtime_error(what), records(std::move(partial)) {}
  std::vector<RunRecord> records;
};

/// Trains one seeded run (seed = base seed + run_index) for
/// epochs * ceil(N / batch_size) optimizer steps. `run_id` labels records.
RunResult run_training(const ExperimentConfig& cfg, const TaskInstance& task, Variant variant,
                       int run_index, int run_id);
RunResult run_training(const ExperimentConfig& cfg, Variant variant, int run_index);

struct MemberMetrics {
  std::string label;
  double accuracy = 0.0;
  double weighted_f = 0.0;
  double weighted_g = 0.0;
  double final_loss = 0.0;
};

struct MetricsReport {
  std::vector<MemberMetrics> members;
  /// "ens:<variant>" per variant, "ens:all" over every run when several
  /// variants are given, and "here" (baseline sgd runs weight 1, the rest
  /// weight 2) when sgd is mixed with other variants.
  std::vector<MemberMetrics> fusions;
  std::vector<RunRecord> records;  // sorted by (run_id, epoch)
  std::vector<RunResult> runs;
  std::vector<std::pair<std::string, ProbabilityMatrix>> fused_probs;
  std::int64_t total_steps = 0;
};

/// Runs every (variant, run) pair, variant-major: run_id = v * runs + r.
MetricsReport run_ensemble(const ExperimentConfig& cfg);

inline constexpr const char* kRecordHeader =
    "run_id,optimizer,task,seed,epoch,train_loss,eval_accuracy,wall_ms";

void emit_csv(std::span<const RunRecord> records, std::ostream& out);
void emit_csv(std::span<const RunRecord> records, const std::filesystem::path& path);
void emit_metrics_csv(const MetricsReport& report, std::ostream& out);

}  // namespace expadam
