#pragma once

#include <functional>
#include <string>
#include <vector>

#include "phi4/cache.hpp"
#include "phi4/pipeline.hpp"

namespace phi4 {

struct CriterionResult {
  int id = 0;
  std::string title;
  bool passed = false;
  std::string detail;
  double seconds = 0;
};

struct AcceptanceOptions {
  bool extended = false;  // adds criterion 12
  std::vector<int> only;  // empty = all
  CountCache* cache = nullptr;
  unsigned threads = 0;
  /// Called after each criterion finishes.
  std::function<void(const CriterionResult&)> on_result;
};

/// Runs the acceptance criteria in order; one result per criterion.
std::vector<CriterionResult> run_acceptance(const AcceptanceOptions& opt);

/// "[PASS] 4 B and D_B counts (1.2 s): detail"
std::string format_result(const CriterionResult& r);

}  // namespace phi4
