// Runs every acceptance criterion and prints one PASS/FAIL line for each.
// Optional arguments restrict the run to the listed criterion numbers.

#include <cstdlib>
#include <iostream>
#include <string>
#include <vector>

#include "ordgp/oracle/acceptance.hpp"

int main(int argc, char** argv) {
  std::vector<int> ids;
  for (int a = 1; a < argc; ++a) {
    ids.push_back(std::atoi(argv[a]));
  }
  int failed = 0;
  for (const auto& result : ordgp::oracle::run_criteria(ids)) {
    std::cout << ordgp::oracle::format(result) << std::endl;
    failed += result.passed ? 0 : 1;
  }
  std::cout << (failed == 0 ? "all criteria passed" : std::to_string(failed) + " criteria failed") << std::endl;
  return failed == 0 ? EXIT_SUCCESS : EXIT_FAILURE;
}
