#pragma once

#include <ostream>
#include <string>
#include <vector>

#include "nucleo/config.hpp"

namespace nucleo::cli {

// 0 success, 1 config problem, 2 missing/broken data or I/O
inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 1;
inline constexpr int kExitData = 2;

extern const std::vector<std::string> kCommandNames;

// Validates keys, runs the named subcommand and maps errors to the exit
// contract. A failure after artifacts may have been written leaves
// "<output_dir>/<command>.failed" containing the error.
int run_command(const std::string& name, const KeyValueConfig& cfg, std::ostream& out,
                std::ostream& err);

}  // namespace nucleo::cli
