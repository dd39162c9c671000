#pragma once

#include <nlohmann/json.hpp>

#include <cstdint>
#include <filesystem>
#include <string>

namespace supermoment::cli {

using Json = nlohmann::ordered_json;

enum ExitCode : int { kPass = 0, kCheckFailed = 1, kInputError = 2 };

/// Everything a subcommand needs besides its own config section.
struct RunContext {
  std::string command;
  Json config = Json::object();
  /// SHA-256 of the canonical (compact) dump of the config document.
  std::string configHash;
  std::uint64_t seed = 0;
  /// "config", "flag", "generated" or "unused".
  std::string seedSource = "config";
  std::filesystem::path outDir = ".";

  void writeJson(const std::string& name, const Json& doc) const;
  void writeText(const std::string& name, const std::string& text) const;
  /// Header block shared by every report.
  Json provenance() const;
};

/// Full command-line entry point; returns the process exit code.
int run(int argc, char** argv);

int cmdKernelsCheck(const RunContext& ctx);
int cmdRho(const RunContext& ctx);
int cmdRhoOracle(const RunContext& ctx);
int cmdSimulate(const RunContext& ctx);
int cmdCalibrate(const RunContext& ctx);
int cmdHarnackConstructive(const RunContext& ctx);
int cmdHarnackEmpirical(const RunContext& ctx);
int cmdReport(const RunContext& ctx);

std::string sha256Hex(const std::string& bytes);

}  // namespace supermoment::cli
