#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "expadam/harness.hpp"
#include "expadam/metrics.hpp"
#include "expadam/optimizer.hpp"
#include "expadam/state_io.hpp"

namespace py = pybind11;
using namespace expadam;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

Tensor to_tensor(const Array& a) {
  Shape shape(a.shape(), a.shape() + a.ndim());
  if (shape.empty()) shape = {1};
  return Tensor(shape, std::vector<double>(a.data(), a.data() + a.size()));
}

Array to_array(const Tensor& t) {
  std::vector<py::ssize_t> shape(t.shape().begin(), t.shape().end());
  Array out(shape);
  std::copy(t.data().begin(), t.data().end(), out.mutable_data());
  return out;
}

TensorMap to_map(const py::dict& d) {
  TensorMap out;
  for (auto [k, v] : d) out.emplace(py::cast<std::string>(k), to_tensor(py::cast<Array>(v)));
  return out;
}

py::dict from_map(const TensorMap& m) {
  py::dict d;
  for (const auto& [k, v] : m) d[py::str(k)] = to_array(v);
  return d;
}

ProbabilityMatrix to_pm(const Array& a) {
  if (a.ndim() != 2) throw std::invalid_argument("probabilities must be a 2-D array");
  return ProbabilityMatrix(static_cast<std::size_t>(a.shape(0)), static_cast<std::size_t>(a.shape(1)),
                           std::vector<double>(a.data(), a.data() + a.size()));
}

Array from_pm(const ProbabilityMatrix& pm) {
  Array out({static_cast<py::ssize_t>(pm.rows()), static_cast<py::ssize_t>(pm.cols())});
  std::copy(pm.values().begin(), pm.values().end(), out.mutable_data());
  return out;
}

std::vector<ProbabilityMatrix> to_pms(const std::vector<Array>& members) {
  std::vector<ProbabilityMatrix> out;
  for (const auto& m : members) out.push_back(to_pm(m));
  return out;
}

py::dict metrics_dict(const MemberMetrics& m) {
  py::dict d;
  d["label"] = m.label;
  d["accuracy"] = m.accuracy;
  d["weighted_f"] = m.weighted_f;
  d["weighted_g"] = m.weighted_g;
  d["final_loss"] = m.final_loss;
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Adam-family optimizers, ensemble fusion and imbalanced-class metrics";

  py::register_exception<OptimizerError>(m, "OptimizerError", PyExc_RuntimeError);
  py::register_exception<ShapeError>(m, "ShapeError", PyExc_ValueError);

  py::enum_<Variant>(m, "Variant")
      .value("SGD", Variant::SGD)
      .value("Adam", Variant::Adam)
      .value("AMSGrad", Variant::AMSGrad)
      .value("DiffGrad", Variant::DiffGrad)
      .value("DGrad", Variant::DGrad)
      .value("Cos", Variant::Cos)
      .value("Exp", Variant::Exp)
      .value("ExpLR", Variant::ExpLR);
  py::enum_<NormScope>(m, "NormScope").value("PerTensor", NormScope::PerTensor).value("Global", NormScope::Global);
  py::enum_<AvgMode>(m, "AvgMode").value("SquaredGrad", AvgMode::SquaredGrad).value("Grad", AvgMode::Grad);

  py::class_<OptimizerConfig>(m, "OptimizerConfig")
      .def(py::init<>())
      .def_readwrite("variant", &OptimizerConfig::variant)
      .def_readwrite("lr", &OptimizerConfig::lambda)
      .def_readwrite("rho1", &OptimizerConfig::rho1)
      .def_readwrite("rho2", &OptimizerConfig::rho2)
      .def_readwrite("epsilon", &OptimizerConfig::epsilon)
      .def_readwrite("k", &OptimizerConfig::k)
      .def_readwrite("steps", &OptimizerConfig::steps)
      .def_readwrite("eps_div", &OptimizerConfig::eps_div)
      .def_readwrite("norm_scope", &OptimizerConfig::norm_scope)
      .def_readwrite("avg_mode", &OptimizerConfig::avg_mode)
      .def("validate", &OptimizerConfig::validate);

  py::class_<Optimizer>(m, "Optimizer")
      .def(py::init<OptimizerConfig>(), py::arg("config"))
      .def_static(
          "from_snapshot",
          [](const std::string& json) {
            auto s = OptimizerSnapshot::from_json(json);
            return Optimizer(s.config, s.state);
          },
          py::arg("json"))
      .def(
          "step",
          [](Optimizer& opt, const py::dict& params, const py::dict& grads) {
            TensorMap p = to_map(params);
            StepReport r = opt.step(p, to_map(grads));
            py::dict report;
            report["xi"] = from_map(r.xi);
            report["effective_update"] = from_map(r.effective_update);
            report["lr_scalar"] = r.lr_scalar;
            return py::make_tuple(from_map(p), report);
          },
          py::arg("params"), py::arg("grads"),
          "Returns (updated params, report). Inputs are not modified.")
      .def_property_readonly("t", [](const Optimizer& o) { return o.state().t; })
      .def("snapshot", [](const Optimizer& o) { return OptimizerSnapshot{o.config(), o.state()}.to_json(); });

  m.def("cyclic_rate", &cyclic_rate, py::arg("t"), py::arg("steps") = 30);
  m.def(
      "exp_xi", [](const Array& dag, const OptimizerConfig& cfg) { return to_array(exp_xi(to_tensor(dag), cfg)); },
      py::arg("dag"), py::arg("config") = OptimizerConfig{});
  m.def(
      "explr_xi",
      [](const Array& dag, const Array& dag_hat, const OptimizerConfig& cfg) {
        return to_array(explr_xi(to_tensor(dag), to_tensor(dag_hat), cfg));
      },
      py::arg("dag"), py::arg("dag_hat"), py::arg("config") = OptimizerConfig{});

  m.def(
      "fuse_average", [](const std::vector<Array>& members) { return from_pm(fuse_average(to_pms(members))); },
      py::arg("members"));
  m.def(
      "fuse_weighted_sum",
      [](const std::vector<Array>& members, const std::vector<double>& weights) {
        return from_pm(fuse_weighted_sum(to_pms(members), weights));
      },
      py::arg("members"), py::arg("weights"));
  m.def(
      "accuracy", [](const Array& p, const std::vector<int>& y) { return accuracy(to_pm(p), y); },
      py::arg("probs"), py::arg("labels"));
  m.def(
      "weighted_f_score", [](const Array& p, const std::vector<int>& y) { return weighted_f_score(to_pm(p), y); },
      py::arg("probs"), py::arg("labels"));
  m.def(
      "weighted_g_mean", [](const Array& p, const std::vector<int>& y) { return weighted_g_mean(to_pm(p), y); },
      py::arg("probs"), py::arg("labels"));
  m.def(
      "confusion",
      [](const Array& p, const std::vector<int>& y) {
        auto cm = confusion(to_pm(p), y);
        const auto c = static_cast<py::ssize_t>(cm.num_classes());
        py::array_t<std::int64_t> out({c, c});
        auto v = out.mutable_unchecked<2>();
        for (py::ssize_t i = 0; i < c; ++i)
          for (py::ssize_t j = 0; j < c; ++j) v(i, j) = cm(static_cast<std::size_t>(i), static_cast<std::size_t>(j));
        return out;
      },
      py::arg("probs"), py::arg("labels"));

  m.def(
      "synth_blobs",
      [](const std::vector<std::size_t>& n, const std::vector<std::vector<double>>& centers, double sigma,
         std::uint64_t seed) {
        Dataset d = synth_blobs(n, centers, sigma, seed);
        Array x({static_cast<py::ssize_t>(d.size()), static_cast<py::ssize_t>(d.num_features)});
        std::copy(d.features.begin(), d.features.end(), x.mutable_data());
        return py::make_tuple(x, d.labels);
      },
      py::arg("n_per_class"), py::arg("centers"), py::arg("sigma"), py::arg("seed"));

  m.def(
      "run_ensemble",
      [](const std::string& task, const std::vector<std::string>& optimizers, int runs, int epochs,
         int batch_size, std::uint64_t seed, double lr) {
        ExperimentConfig cfg;
        cfg.task = task;
        cfg.variants.clear();
        for (const auto& name : optimizers) {
          auto v = parse_variant(name);
          if (!v) throw std::invalid_argument("unknown optimizer '" + name + "'");
          cfg.variants.push_back(*v);
        }
        cfg.runs = runs;
        cfg.epochs = epochs;
        cfg.batch_size = batch_size;
        cfg.seed = seed;
        cfg.optimizer.lambda = lr;
        cfg.timing = false;
        MetricsReport r;
        {
          py::gil_scoped_release release;
          r = run_ensemble(cfg);
        }
        py::dict out;
        py::list members, fusions;
        for (const auto& x : r.members) members.append(metrics_dict(x));
        for (const auto& x : r.fusions) fusions.append(metrics_dict(x));
        out["members"] = members;
        out["fusions"] = fusions;
        out["total_steps"] = r.total_steps;
        return out;
      },
      py::arg("task") = "blobs", py::arg("optimizers") = std::vector<std::string>{"adam"},
      py::arg("runs") = 1, py::arg("epochs") = 20, py::arg("batch_size") = 30, py::arg("seed") = 0,
      py::arg("lr") = 1e-3);
}
