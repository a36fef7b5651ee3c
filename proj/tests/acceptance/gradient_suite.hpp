#pragma once

#include <string>
#include <vector>

namespace fastre_acceptance {

struct GradientCaseReport {
  std::string name;
  std::size_t checked = 0;
  double max_rel_error = 0.0;
  bool passed = false;
};

struct GradientSuiteReport {
  std::vector<GradientCaseReport> cases;
  double tolerance = 0.0;
  double seconds = 0.0;
};

// Runs every finite-difference case in double precision.
GradientSuiteReport run_gradient_suite();

}  // namespace fastre_acceptance
