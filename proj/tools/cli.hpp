#pragma once

#include <iosfwd>
#include <optional>
#include <string_view>
#include <vector>

namespace abc::cli {

enum ExitCode : int {
  kOk = 0,
  kIoError = 1,
  kUsage = 2,
  kValidation = 3,
  kSafetyStop = 4,
};

// Runs the `abc` command line. All output goes to `out` (results) and `err`
// (diagnostics, chosen seeds); nothing touches the process streams.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

// "0.1,0.05, 0.01" -> {0.1, 0.05, 0.01}. Throws std::invalid_argument.
std::vector<double> parse_double_list(std::string_view text);
std::vector<int> parse_int_list(std::string_view text);
// Like parse_double_list, with the word "random" mapping to nullopt.
std::vector<std::optional<double>> parse_delta_grid(std::string_view text);

}  // namespace abc::cli
