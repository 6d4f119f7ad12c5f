#pragma once

// Batch front end: one named command per run, results written as JSON, CSV
// and plain-text data files next to a manifest.

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace ghzlab::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitNumerical = 3;

inline constexpr const char* kVersion = "1.0.0";
inline constexpr const char* kThreadsVariable = "GHZLAB_THREADS";

struct Options {
  std::string command;
  std::optional<std::filesystem::path> config;
  std::filesystem::path out_dir = ".";
  std::optional<int> threads; // overrides GHZLAB_THREADS
};

std::vector<std::string> commands();

/// Runs one command. Progress goes to `out`, diagnostics to `err`; the
/// return value is the process exit code.
int run(const Options& options, std::ostream& out, std::ostream& err);

/// Argument parsing plus run().
int main(int argc, char** argv);

} // namespace ghzlab::cli
