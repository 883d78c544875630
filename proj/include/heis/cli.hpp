#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace heis::cli {

enum ExitCode : int {
  exit_ok = 0,
  exit_tolerance = 1,
  exit_usage = 2,
  exit_internal = 3,
};

/// Runs `heis-overdet` with `args` (program name excluded).
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// "0.5", "1/128" -> double; throws InvalidInput.
double parse_number(const std::string& text);
/// Comma-separated parse_number list.
std::vector<double> parse_list(const std::string& text);

}  // namespace heis::cli
