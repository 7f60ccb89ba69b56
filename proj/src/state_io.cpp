#include "expadam/state_io.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace expadam {

namespace {

using nlohmann::json;

json tensor_to_json(const Tensor& t) {
  return json{{"shape", t.shape()}, {"data", t.values()}};
}

Tensor tensor_from_json(const json& j) {
  return Tensor(j.at("shape").get<Shape>(), j.at("data").get<std::vector<double>>());
}

template <typename E>
E parse_enum(const json& j, std::optional<E> (*parse)(std::string_view), const char* what) {
  auto v = parse(j.get<std::string>());
  if (!v) throw std::runtime_error(std::string("snapshot: unknown ") + what + " '" + j.get<std::string>() + "'");
  return *v;
}

}  // namespace

std::string OptimizerSnapshot::to_json() const {
  json params = json::object();
  for (const auto& [name, p] : state.params) {
    params[name] = json{{"m", tensor_to_json(p.m)},
                        {"u", tensor_to_json(p.u)},
                        {"avg", tensor_to_json(p.avg)},
                        {"u_max", tensor_to_json(p.u_max)},
                        {"g_prev", tensor_to_json(p.g_prev)}};
  }
  const auto& c = config;
  json j{{"format", "expadam-optimizer-state"},
         {"version", kVersion},
         {"config",
          {{"variant", to_string(c.variant)},
           {"lambda", c.lambda},
           {"rho1", c.rho1},
           {"rho2", c.rho2},
           {"epsilon", c.epsilon},
           {"k", c.k},
           {"steps", c.steps},
           {"eps_div", c.eps_div},
           {"norm_scope", to_string(c.norm_scope)},
           {"avg_mode", to_string(c.avg_mode)}}},
         {"t", state.t},
         {"params", params}};
  return j.dump(1);
}

OptimizerSnapshot OptimizerSnapshot::from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
    if (j.at("format") != "expadam-optimizer-state") throw std::runtime_error("snapshot: wrong format tag");
    if (j.at("version").get<int>() != kVersion) {
      throw std::runtime_error("snapshot: unsupported version " + j.at("version").dump());
    }
    OptimizerSnapshot s;
    const auto& c = j.at("config");
    s.config.variant = parse_enum<Variant>(c.at("variant"), &parse_variant, "variant");
    s.config.lambda = c.at("lambda").get<double>();
    s.config.rho1 = c.at("rho1").get<double>();
    s.config.rho2 = c.at("rho2").get<double>();
    s.config.epsilon = c.at("epsilon").get<double>();
    s.config.k = c.at("k").get<double>();
    s.config.steps = c.at("steps").get<std::int64_t>();
    s.config.eps_div = c.at("eps_div").get<double>();
    s.config.norm_scope = parse_enum<NormScope>(c.at("norm_scope"), &parse_norm_scope, "norm_scope");
    s.config.avg_mode = parse_enum<AvgMode>(c.at("avg_mode"), &parse_avg_mode, "avg_mode");
    s.config.validate();
    s.state.t = j.at("t").get<std::int64_t>();
    for (const auto& [name, p] : j.at("params").items()) {
      ParamState ps{tensor_from_json(p.at("m")), tensor_from_json(p.at("u")),
                    tensor_from_json(p.at("avg")), tensor_from_json(p.at("u_max")),
                    tensor_from_json(p.at("g_prev"))};
      for (const Tensor* t : {&ps.u, &ps.avg, &ps.u_max, &ps.g_prev}) {
        require_same_shape(ps.m, *t, "snapshot");
      }
      s.state.params.emplace(name, std::move(ps));
    }
    return s;
  } catch (const json::exception& e) {
    throw std::runtime_error(std::string("snapshot: malformed document: ") + e.what());
  }
}

void OptimizerSnapshot::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open '" + path.string() + "' for writing");
  out << to_json();
  if (!out) throw std::runtime_error("failed writing '" + path.string() + "'");
}

OptimizerSnapshot OptimizerSnapshot::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return from_json(ss.str());
}

}  // namespace expadam
