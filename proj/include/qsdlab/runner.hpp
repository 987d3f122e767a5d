#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "qsdlab/config.hpp"

namespace qsdlab {

inline constexpr const char* kVersion = "1.0.0";

struct RunOptions {
  std::optional<std::uint64_t> seed;    // --seed
  std::optional<std::string> out_dir;   // --out
  int workers = 0;                      // --workers (0 keeps the OpenMP default)
};

// --seed, then QSD_LAB_SEED, then [run] seed.
std::uint64_t resolve_seed(const RunConfig& c, const RunOptions& o);

const std::vector<std::string>& subcommands();

struct RunResult {
  int exit_code = 0;  // 0 ok, 1 a verification reported failure
  std::vector<std::string> files;  // written files, "<subcommand>/<name>" relative to the output directory
};

// Runs one subcommand and writes its outputs plus manifest.json into <out>/<subcommand>/.
// Module errors propagate.
RunResult run_scenario(const RunConfig& c, const std::string& subcommand, const RunOptions& o);

// Command-line entry: maps errors to exit codes (usage 2, numerical 3, infeasible 4).
int run_cli(int argc, char** argv);

}  // namespace qsdlab
