#include "config.hpp"

#include <fstream>
#include <iostream>

namespace supermoment::cli {

namespace {
const char* const kReports[] = {"kernels_report.json", "rho_summary.json", "rho_oracle.json",    "moments.json",
                                "calibration.json",    "ledger.json",      "harnack_report.json"};
}

/// Collects the pass/fail state of every known report in the output
/// directory into report.json and prints one line per report.
int cmdReport(const RunContext& ctx) {
  allowKeys(section(ctx.config, "report"), {}, "report");
  Json found = Json::array();
  bool ok = true;
  for (const char* name : kReports) {
    const auto path = ctx.outDir / name;
    if (!std::filesystem::exists(path)) continue;
    std::ifstream is(path, std::ios::binary);
    Json doc = Json::parse(is);
    const bool passed = doc.value("passed", false);
    ok = ok && passed;
    Json row = {{"file", name}, {"command", doc.value("command", "")}, {"passed", passed},
                {"config_hash", doc.value("config_hash", "")}, {"seed", doc.value("seed", std::uint64_t{0})}};
    if (doc.contains("lambda")) row["lambda"] = doc["lambda"];
    if (doc.contains("gamma")) row["gamma"] = doc["gamma"];
    found.push_back(row);
    std::cout << (passed ? "PASS " : "FAIL ") << name << '\n';
  }
  require(!found.empty(), "report: no reports found in " + ctx.outDir.string());
  Json report = ctx.provenance();
  report["reports"] = found;
  report["passed"] = ok;
  ctx.writeJson("report.json", report);
  return ok ? kPass : kCheckFailed;
}

}  // namespace supermoment::cli
