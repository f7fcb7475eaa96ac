#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "hflow/config.hpp"

namespace hflow {

inline constexpr const char* kVerifySchema = "hflow-verify/1";

struct CheckResult {
  std::string name;
  bool pass = false;
  double error = 0.0;      // measured worst-case error
  double tolerance = 0.0;
  std::string detail;
  double seconds = 0.0;
};

struct VerifyReport {
  std::uint64_t seed = 0;
  std::vector<CheckResult> checks;
  bool pass = false;

  nlohmann::json to_json() const;
};

/// All check names in run order.
const std::vector<std::string>& check_names();

/// Runs the named checks (all when `only` is empty) against the configured
/// background and surface. Throws ConfigError for an unknown name.
VerifyReport run_verify(const RunConfig& config, const std::vector<std::string>& only = {});

}  // namespace hflow
