#pragma once

// Command-line front end. Exit codes: 0 success (feasible for
// feasibility), 2 usage or schema error or unknown suite, 3 validation
// failure or failing property check, 4 infeasible, 5 unknown verdict,
// 6 premise violation, 1 any other error.

#include <iosfwd>
#include <string>
#include <vector>

namespace parfid {

inline constexpr int kExitOk = 0;
inline constexpr int kExitInternal = 1;
inline constexpr int kExitSchema = 2;
inline constexpr int kExitValidation = 3;
inline constexpr int kExitInfeasible = 4;
inline constexpr int kExitUnknown = 5;
inline constexpr int kExitPremise = 6;

/// args[0] is the program name. Reports go to out, diagnostics to err.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace parfid
