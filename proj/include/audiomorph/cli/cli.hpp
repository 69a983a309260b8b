#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace audiomorph::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitRuntime = 2;

/// Parses and dispatches one invocation; argv[0] is the program name.
int run(const std::vector<std::string>& argv, std::ostream& out, std::ostream& err);
int run(int argc, char** argv);

/// Levenshtein distance, used to suggest flags.
std::size_t edit_distance(const std::string& a, const std::string& b);

}  // namespace audiomorph::cli
