#pragma once

#include <string>
#include <vector>

namespace snls {

struct CheckResult {
  std::string name;
  bool pass = false;
  double measured = 0.0;
  std::string detail;  // human-readable "measured vs threshold"
};

// Names: unitarity, parseval, group_law, mass, dispersive, soliton,
// weak_order, x2_order, strang_order. Empty filter runs all of them.
std::vector<std::string> validation_check_names();
std::vector<CheckResult> run_validation(const std::vector<std::string>& only = {});

}  // namespace snls
