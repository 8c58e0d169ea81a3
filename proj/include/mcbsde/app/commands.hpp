#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>

namespace mcbsde::app {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitNoConvergence = 3;
inline constexpr int kExitVerification = 4;

inline constexpr std::string_view kToolVersion = "1.0.0";
inline constexpr int kCsvLayoutVersion = 1;

struct RunOptions {
  std::filesystem::path config;
  std::filesystem::path out = ".";
  int parallel = 1;
  // Adds wall_time_seconds to report.json; off by default so reruns are
  // byte-identical.
  bool record_time = false;
};

// Runs one of solve, simulate, represent, verify, diagnose and returns the
// process exit code. Diagnostics go to `log`.
int run_command(std::string_view command, const RunOptions& options, std::ostream& log);

std::string sha256_hex(std::string_view bytes);

}  // namespace mcbsde::app
