#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace ppk {

struct CriterionResult {
  int id = 0;
  std::string title;
  std::string measured;
  std::string threshold;
  bool pass = false;
  double seconds = 0.0;
};

struct AcceptanceOptions {
  /// Fixed before any run; every experiment derives its streams from it.
  std::uint64_t seed = 20261016;
  /// Criteria to run, numbered 1 to 9; empty runs all.
  std::vector<int> criteria;
};

/// Runs the acceptance experiments in order, reporting each result as it completes.
std::vector<CriterionResult> run_acceptance(
    const AcceptanceOptions& options = {},
    const std::function<void(const CriterionResult&)>& on_result = {});

/// "[PASS] 3 title: measured (threshold)"
std::string format_result(const CriterionResult& result);

}  // namespace ppk
