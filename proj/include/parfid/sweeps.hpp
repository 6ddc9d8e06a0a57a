#pragma once

// Named property sweeps over seeded random instances. Each case derives its
// own seed from the suite seed and its index, so results do not depend on
// the number of worker threads.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace parfid {

struct CaseOutcome {
  bool pass = false;
  double defect = 0.0;  // the quantity compared against the suite tolerance
  std::string detail;
};

struct SuiteOptions {
  std::uint64_t seed = 1;
  int cases = 200;
  int jobs = 1;
  // Corrupts every case so that its check must fail; a harness self-test.
  bool inject_violation = false;
};

struct SuiteResult {
  std::string suite;
  std::string property;
  double tolerance = 0.0;
  int cases = 0;
  int passed = 0;
  int failed = 0;
  double worst_defect = 0.0;
  std::optional<int> first_failing_case;
  std::optional<std::uint64_t> first_failing_seed;
  std::string first_failure;
};

struct SuiteInfo {
  std::string name;
  std::string property;
  double tolerance;
};

const std::vector<SuiteInfo>& suites();

/// Throws PreconditionError for an unknown suite or invalid options.
SuiteResult run_suite(const std::string& name, const SuiteOptions& options);

/// A single case, for reproducing a failure from its reported seed.
CaseOutcome run_case(const std::string& name, std::uint64_t case_seed, bool inject_violation);

/// Seed of case i of a suite run with the given suite seed.
std::uint64_t case_seed(std::uint64_t suite_seed, int index);

}  // namespace parfid
