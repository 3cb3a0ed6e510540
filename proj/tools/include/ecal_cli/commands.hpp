#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace ecal::cli {

inline constexpr int kConfigSchemaVersion = 1;

enum ExitCode : int {
  kOk = 0,
  kUnexpected = 1,
  kConfigFailure = 2,
  kDataFailure = 3,
  kNumericalFailure = 4,
};

struct Flags {
  std::optional<std::filesystem::path> config;
  std::optional<std::uint64_t> seed;
  std::optional<std::filesystem::path> out;
  std::optional<std::string> mode;
  std::optional<int> example;
};

// Built-in defaults, then the config file, then the command-line flags.
nlohmann::json resolve_config(const std::string& command, const Flags& flags);

void cmd_simulate(const nlohmann::json& config);
void cmd_align(const nlohmann::json& config);
void cmd_calibrate(const nlohmann::json& config);
void cmd_report(const nlohmann::json& config);

// Full command-line entry point; returns the process exit code.
int run(int argc, char** argv);
int run(const std::vector<std::string>& args);

}  // namespace ecal::cli
