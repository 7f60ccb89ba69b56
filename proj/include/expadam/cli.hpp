#pragma once

#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

#include "expadam/harness.hpp"

namespace expadam {

/// Bad flag, malformed value or violated config invariant. Exit code 2.
class UsageError : public std::runtime_error {
public:
  UsageError(const std::string& what, std::string usage)
      : std::runtime_error(what), usage(std::move(usage)) {}
  std::string usage;
};

struct HelpRequested {
  std::string text;
};

/// args excludes the program name. Throws UsageError or HelpRequested.
ExperimentConfig parse_cli(const std::vector<std::string>& args);

/// Full command: parse, run the ensemble, write CSV outputs, print the
/// metrics summary. Returns 0 on success, 1 on run failure, 2 on usage error.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace expadam
