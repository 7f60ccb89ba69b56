#pragma once

#include <filesystem>
#include <string>

#include "expadam/optimizer.hpp"

namespace expadam {

/// Versioned JSON snapshot of an optimizer: config, step counter and every
/// moment tensor with its shape. Doubles round-trip bit-exactly.
struct OptimizerSnapshot {
  static constexpr int kVersion = 1;

  OptimizerConfig config;
  OptimizerState state;

  std::string to_json() const;
  static OptimizerSnapshot from_json(const std::string& text);

  void save(const std::filesystem::path& path) const;
  static OptimizerSnapshot load(const std::filesystem::path& path);
};

}  // namespace expadam
