#pragma once

#include <ostream>

#include "ppk/config.hpp"

namespace ppk {

inline constexpr const char* kVersion = "0.1.0";

/// Runs one subcommand and writes its artifacts plus manifest.txt into
/// config.out_dir. Returns 0 on success, 1 on usage or input errors and 2
/// on numerical failure.
int run(const RunConfig& config, std::ostream& log);

/// Command-line entry point: `ppkrige <subcommand> [flags]`.
int main_entry(int argc, char** argv, std::ostream& out, std::ostream& err);

}  // namespace ppk
