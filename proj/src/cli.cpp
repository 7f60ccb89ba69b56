#include "expadam/cli.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "expadam/csv.hpp"

namespace expadam {

namespace {

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::string variant_choices() {
  std::string s;
  for (Variant v : all_variants()) s += (s.empty() ? "" : "|") + std::string(to_string(v));
  return s;
}

}  // namespace

ExperimentConfig parse_cli(const std::vector<std::string>& args) {
  ExperimentConfig cfg;
  auto& opt = cfg.optimizer;
  std::string optimizers = "adam";
  std::string norm_scope = std::string(to_string(opt.norm_scope));
  std::string avg_mode = std::string(to_string(opt.avg_mode));
  bool no_timing = false;

  CLI::App app{"Train seeded optimizer runs on toy tasks and score their ensembles.", "expadam"};
  app.set_config("--config", "", "TOML/INI file mirroring the flags; flags take precedence");
  app.add_option("--task", cfg.task, "quadratic|rosenbrock|blobs|blobs-logreg")->capture_default_str();
  app.add_option("--optimizer", optimizers, "comma-separated list of " + variant_choices())
      ->capture_default_str();
  app.add_option("--runs", cfg.runs, "seeded runs per optimizer")->capture_default_str();
  app.add_option("--epochs", cfg.epochs)->capture_default_str();
  app.add_option("--batch-size", cfg.batch_size)->capture_default_str();
  app.add_option("--lr", opt.lambda, "base learning rate")->capture_default_str();
  app.add_option("--rho1", opt.rho1, "first-moment decay")->capture_default_str();
  app.add_option("--rho2", opt.rho2, "second-moment decay")->capture_default_str();
  app.add_option("--epsilon", opt.epsilon)->capture_default_str();
  app.add_option("--k", opt.k, "Exp scaling factor")->capture_default_str();
  app.add_option("--steps", opt.steps, "Cos period in optimizer steps")->capture_default_str();
  app.add_option("--norm-scope", norm_scope, "per-tensor|global")->capture_default_str();
  app.add_option("--avg-mode", avg_mode, "squared-grad|grad")->capture_default_str();
  app.add_option("--seed", cfg.seed, "base seed; run i uses seed + i")->capture_default_str();
  app.add_option("--out", cfg.out, "records CSV path (default: stdout)");
  app.add_option("--hidden", cfg.hidden, "MLP hidden width for the blobs task")->capture_default_str();
  app.add_option("--metrics-out", cfg.metrics_out, "per-member and fused metrics CSV path");
  app.add_option("--probs-dir", cfg.probs_dir, "directory for test-split probability CSVs");
  app.add_option("--jobs", cfg.jobs, "runs trained in parallel")->capture_default_str();
  app.add_flag("--no-timing", no_timing, "write wall_ms as 0 so output bytes are reproducible");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    throw HelpRequested{app.help()};
  } catch (const CLI::CallForAllHelp&) {
    throw HelpRequested{app.help()};
  } catch (const CLI::ParseError& e) {
    throw UsageError(e.what(), app.help());
  }

  try {
    cfg.variants.clear();
    for (const auto& name : split_list(optimizers)) {
      auto v = parse_variant(name);
      if (!v) throw std::invalid_argument("unknown optimizer '" + name + "' (expected " + variant_choices() + ")");
      if (std::find(cfg.variants.begin(), cfg.variants.end(), *v) == cfg.variants.end())
        cfg.variants.push_back(*v);
    }
    auto scope = parse_norm_scope(norm_scope);
    if (!scope) throw std::invalid_argument("unknown norm scope '" + norm_scope + "'");
    opt.norm_scope = *scope;
    auto mode = parse_avg_mode(avg_mode);
    if (!mode) throw std::invalid_argument("unknown avg mode '" + avg_mode + "'");
    opt.avg_mode = *mode;
    cfg.timing = !no_timing;
    cfg.validate();
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what(), app.help());
  }
  return cfg;
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  ExperimentConfig cfg;
  try {
    cfg = parse_cli(args);
  } catch (const HelpRequested& h) {
    out << h.text;
    return 0;
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n\n" << e.usage;
    return 2;
  }

  auto write_records = [&](const std::vector<RunRecord>& records) {
    if (cfg.out.empty()) {
      emit_csv(records, out);
    } else {
      emit_csv(records, std::filesystem::path(cfg.out));
    }
  };

  try {
    MetricsReport report;
    try {
      report = run_ensemble(cfg);
    } catch (const RunFailure& f) {
      write_records(f.records);
      err << "error: " << f.what() << '\n';
      return 1;
    }
    write_records(report.records);

    if (!cfg.metrics_out.empty()) {
      std::ofstream m(cfg.metrics_out, std::ios::binary);
      if (!m) throw std::runtime_error("cannot open '" + cfg.metrics_out + "' for writing");
      emit_metrics_csv(report, m);
    }
    if (!cfg.probs_dir.empty()) {
      const std::filesystem::path dir(cfg.probs_dir);
      std::filesystem::create_directories(dir);
      for (const auto& r : report.runs)
        if (r.test_probs)
          write_csv(*r.test_probs, dir / ("run_" + std::to_string(r.run_id) + ".csv"));
      for (const auto& [label, pm] : report.fused_probs) {
        std::string file = label;
        std::replace(file.begin(), file.end(), ':', '_');
        write_csv(pm, dir / (file + ".csv"));
      }
    }

    // Summary goes to stderr when records are streamed to stdout.
    std::ostream& summary = cfg.out.empty() ? err : out;
    summary << "total optimizer steps: " << report.total_steps << '\n';
    for (const auto& group : {&report.members, &report.fusions}) {
      for (const auto& m : *group) {
        char line[160];
        std::snprintf(line, sizeof line, "%-14s acc=%.4f  F=%.4f  G=%.4f  loss=%.6g\n",
                      m.label.c_str(), m.accuracy, m.weighted_f, m.weighted_g, m.final_loss);
        summary << line;
      }
    }
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}

}  // namespace expadam
