#pragma once

#include <string>
#include <vector>

namespace refmap::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitRuntime = 3;

/// Default output root when neither --out nor output_dir is given.
inline constexpr const char* kOutputRootVar = "REFMAP_OUTPUT_ROOT";

/// args excludes the program name.
int run(const std::vector<std::string>& args);
int run(int argc, char** argv);

}  // namespace refmap::cli
