#include "cli.hpp"

#include "config.hpp"

#include <CLI11.hpp>
#include <openssl/evp.h>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include <cstdlib>
#include <fstream>
#include <functional>
#include <map>
#include <random>
#include <sstream>

namespace supermoment::cli {

std::string sha256Hex(const std::string& bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1)
    throw std::runtime_error("sha256 failed");
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned i = 0; i < len; ++i) {
    out += hex[digest[i] >> 4];
    out += hex[digest[i] & 15];
  }
  return out;
}

void RunContext::writeText(const std::string& name, const std::string& text) const {
  std::filesystem::create_directories(outDir);
  const auto path = outDir / name;
  std::ofstream os(path, std::ios::binary);
  if (!os) throw InputError("cannot open output file " + path.string());
  os << text;
  if (!os) throw std::runtime_error("failed writing " + path.string());
  spdlog::info("wrote {}", path.string());
}

void RunContext::writeJson(const std::string& name, const Json& doc) const { writeText(name, doc.dump(2) + "\n"); }

Json RunContext::provenance() const {
  return Json{{"command", command}, {"config_hash", configHash}, {"seed", seed}, {"seed_source", seedSource}};
}

namespace {

void configureLogging() {
  auto logger = spdlog::stderr_color_mt("supermoment");
  spdlog::set_default_logger(logger);
  spdlog::set_pattern("[%l] %v");
  spdlog::set_level(spdlog::level::warn);
  if (const char* env = std::getenv("SUPERMOMENT_LOG")) {
    auto level = spdlog::level::from_str(env);
    // from_str maps unknown names to off; only honour names it knows
    if (level != spdlog::level::off || std::string(env) == "off") spdlog::set_level(level);
    else spdlog::warn("SUPERMOMENT_LOG='{}' is not a log level; keeping 'warn'", env);
  }
}

Json readConfig(const std::string& path) {
  if (path.empty()) return Json::object();
  std::ifstream is(path, std::ios::binary);
  if (!is) throw InputError("cannot read config file " + path);
  Json cfg = Json::parse(is);
  require(cfg.is_object(), "config: the document must be a JSON object");
  return cfg;
}

}  // namespace

int run(int argc, char** argv) {
  if (!spdlog::get("supermoment")) configureLogging();

  CLI::App app{"Moment densities of super-Brownian exit measures on balls"};
  app.require_subcommand(1, 1);
  app.fallthrough();
  std::string configPath;
  std::string outDir = ".";
  std::uint64_t seedFlag = 0;
  unsigned threads = 0;
  app.add_option("--config", configPath, "JSON run configuration")->check(CLI::ExistingFile);
  auto* seedOpt = app.add_option("--seed", seedFlag, "Seed for stochastic commands (overrides the config)");
  app.add_option("--out", outDir, "Output directory");
  app.add_option("--threads", threads, "Worker thread cap (0 = all cores); never changes results");

  const std::map<std::string, std::pair<std::string, std::function<int(const RunContext&)>>> commands = {
      {"kernels-check", {"Kernel identities and classical constants", cmdKernelsCheck}},
      {"rho", {"Moment density tables by quadrature", cmdRho}},
      {"rho-oracle", {"Monte Carlo estimate of a moment density", cmdRhoOracle}},
      {"simulate", {"Branching particle exit measures and moments", cmdSimulate}},
      {"calibrate", {"Calibrate the particle branch rate", cmdCalibrate}},
      {"harnack-constructive", {"Constructive Harnack constant ledger", cmdHarnackConstructive}},
      {"harnack-empirical", {"Empirical Harnack ratios against the constructive bound", cmdHarnackEmpirical}},
      {"report", {"Summarise the reports in the output directory", cmdReport}},
  };
  for (const auto& [name, entry] : commands) app.add_subcommand(name, entry.first);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? kPass : kInputError;
  }

  RunContext ctx;
  ctx.command = app.get_subcommands().front()->get_name();
  ctx.outDir = outDir;
  try {
    ctx.config = readConfig(configPath);
    ctx.configHash = sha256Hex(ctx.config.dump());
    // commands that draw no random numbers do not need a seed
    const bool stochastic = ctx.command != "rho" && ctx.command != "report";
    if (!stochastic) {
      ctx.seed = *seedOpt ? seedFlag : 0;
      ctx.seedSource = "unused";
    } else if (*seedOpt) {
      ctx.seed = seedFlag;
      ctx.seedSource = "flag";
    } else if (ctx.config.contains("seed")) {
      require(ctx.config.at("seed").is_number_unsigned() || ctx.config.at("seed").is_number_integer(),
              "config: seed must be an integer");
      require(ctx.config.at("seed").get<long long>() >= 0 || ctx.config.at("seed").is_number_unsigned(),
              "config: seed must be >= 0");
      ctx.seed = ctx.config.at("seed").get<std::uint64_t>();
      ctx.seedSource = "config";
    } else {
      std::random_device rd;
      ctx.seed = (static_cast<std::uint64_t>(rd()) << 32) | rd();
      ctx.seedSource = "generated";
      spdlog::warn("no seed given; generated seed {} (recorded in the report)", ctx.seed);
    }
    setMaxThreads(threads);
    return commands.at(ctx.command).second(ctx);
  } catch (const InputError& e) {
    spdlog::error("{}", e.what());
    return kInputError;
  } catch (const nlohmann::json::exception& e) {
    spdlog::error("config: {}", e.what());
    return kInputError;
  } catch (const BudgetExceeded& e) {
    spdlog::error("{}", e.what());
    return kCheckFailed;
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return kCheckFailed;
  }
}

}  // namespace supermoment::cli
