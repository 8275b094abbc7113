#pragma once

#include <string>
#include <vector>

namespace gaitnet::cli {

inline constexpr const char* kToolVersion = "0.1.0";

// Full command-line surface (synth / train / loo / report / replay).
// args excludes the program name. Returns the process exit code; 0 only
// when every requested artifact was produced.
int run(std::vector<std::string> args);

}  // namespace gaitnet::cli
