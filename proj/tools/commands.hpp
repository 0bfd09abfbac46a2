#pragma once

#include <string>
#include <vector>

#include <CLI11.hpp>

namespace ikeda::cli {

// Runs the self-test battery; prints one PASS/FAIL line per check.
bool run_check_battery(bool verbose);

// argv with "--config FILE" expanded into "--key=value" tokens placed right
// after the subcommand name, so later command-line flags win.
std::vector<std::string> expand_config(const std::vector<std::string>& args);

int main_with_args(std::vector<std::string> args);

}  // namespace ikeda::cli
