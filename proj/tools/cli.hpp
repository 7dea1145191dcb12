#pragma once

// Command-line front end. Kept as a library so tests can drive it in process.

#include <iosfwd>
#include <string>
#include <vector>

namespace sigtest::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitData = 3;
inline constexpr int kExitNumerical = 4;

// args excludes the program name. Returns the process exit code.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

// Parses a flat config file: a JSON object or key=value lines ('#' comments).
// Array values are joined with commas.
std::vector<std::pair<std::string, std::string>> read_config(const std::string& path);

}  // namespace sigtest::cli
