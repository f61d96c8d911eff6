#pragma once

#include <string>
#include <vector>

namespace perihom {

struct SelftestResult {
  std::string name;
  bool pass = false;
  std::string detail;
};

/// Fast exact-value and property checks across every module (a few
/// seconds in total). Exceptions inside a check count as failures.
std::vector<SelftestResult> run_selftest();

}  // namespace perihom
