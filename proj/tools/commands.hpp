#pragma once

#include <string>
#include <vector>

namespace proxyhpo::cli {

// Exit codes.
constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitTrainer = 3;

/// Runs one command line (without the program name).
int run_cli(std::vector<std::string> args);

}  // namespace proxyhpo::cli
