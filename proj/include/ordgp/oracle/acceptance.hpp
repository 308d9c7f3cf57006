#pragma once

#include <string>
#include <vector>

namespace ordgp::oracle {

struct CriterionResult {
  int id = 0;
  std::string name;
  bool passed = false;
  std::string detail;
  double seconds = 0.0;
};

CriterionResult derivative_correctness();       // 1
CriterionResult recursion_fidelity();           // 2
CriterionResult input_expectation();            // 3
CriterionResult entropy_bound();                // 4
CriterionResult taylor_term();                  // 5
CriterionResult woodbury_updates();             // 6
CriterionResult mcmc_toy_posterior();           // 7
CriterionResult end_to_end_synthetic();         // 8
CriterionResult timing_ordering();              // 9
CriterionResult determinism();                  // 10
CriterionResult optimizer_contract();           // 11

/// All criteria in order. `ids` selects a subset (empty: all).
std::vector<CriterionResult> run_criteria(const std::vector<int>& ids = {});

/// One line per criterion: "[PASS] 3 name (1.2 s): detail".
std::string format(const CriterionResult& result);

}  // namespace ordgp::oracle
