#pragma once

#include <ostream>
#include <string>
#include <vector>

#include "handsoff/model.hpp"

namespace handsoff::cli {

enum ExitCode : int { kOk = 0, kUsage = 1, kInfeasible = 2, kCertificateFailed = 3 };

/// Built-in problems "ex1" (scalar integrator) and "ex2" (double integrator).
Problem example_problem(const std::string& name);

/// Runs one command line (without the program name). Reports go to `out`,
/// diagnostics to `err`; the return value is the process exit code.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace handsoff::cli
