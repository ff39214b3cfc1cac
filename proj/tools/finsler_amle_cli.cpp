// Command-line front end: solve, verify, distance, preset.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "finsler_amle/app.hpp"
#include "finsler_amle/errors.hpp"
#include "finsler_amle/parallel.hpp"

namespace {

struct Source {
  std::string config_path;
  std::string preset;
  std::string output;
};

void add_source(CLI::App* cmd, Source& src) {
  cmd->add_option("config", src.config_path, "Config file (key = value)");
  cmd->add_option("--preset", src.preset, "Built-in problem instead of a config file");
  cmd->add_option("--output", src.output, "Output directory (overrides output.directory)");
}

std::optional<famle::ProblemConfig> load(const Source& src) {
  try {
    if (src.config_path.empty() == src.preset.empty()) {
      std::cerr << "error: give exactly one of a config path or --preset\n";
      return std::nullopt;
    }
    famle::ProblemConfig config = src.preset.empty() ? famle::load_config(src.config_path) : famle::preset(src.preset);
    if (!src.output.empty()) {
      config.output.directory = std::filesystem::absolute(src.output).string();
    }
    config.validate();
    return config;
  } catch (const famle::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return std::nullopt;
  }
}

bool parse_pair(const std::string& text, std::pair<int, int>& out) {
  int i = 0, j = 0;
  char tail = 0;
  if (std::sscanf(text.c_str(), "%d,%d%c", &i, &j, &tail) != 2) return false;
  out = {i, j};
  return true;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"AMLE solver and verifier for Finsler structures on 2D grids"};
  app.require_subcommand(1);
  int threads = 0;
  app.add_option("--threads", threads, "Worker cap (default: FINSLER_AMLE_THREADS, else 1)")->check(CLI::PositiveNumber);

  Source solve_src, verify_src, dist_src;
  auto* solve_cmd = app.add_subcommand("solve", "Compute the AMLE; writes u.csv and report.json");
  add_source(solve_cmd, solve_src);

  auto* verify_cmd = app.add_subcommand("verify", "Run the configured checks on a solution; writes verify.json");
  add_source(verify_cmd, verify_src);
  std::string solution;
  verify_cmd->add_option("--solution", solution, "Solution CSV (x_index,y_index,x,y,value)")->required();

  auto* dist_cmd = app.add_subcommand("distance", "Single-source graph distances; writes dist.csv");
  add_source(dist_cmd, dist_src);
  std::string source_text;
  dist_cmd->add_option("--source", source_text, "Source node i,j")->required();

  auto* preset_cmd = app.add_subcommand("preset", "Print a built-in config");
  std::string preset_name;
  preset_cmd->add_option("name", preset_name, "Preset name")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : famle::kExitConfig;
  }
  if (threads > 0) famle::set_thread_count(threads);

  if (*preset_cmd) {
    try {
      std::cout << famle::serialize_config(famle::preset(preset_name));
      return famle::kExitOk;
    } catch (const famle::Error& e) {
      std::cerr << "error: " << e.what() << "\navailable:";
      for (const auto& n : famle::preset_names()) std::cerr << " " << n;
      std::cerr << "\n";
      return famle::kExitConfig;
    }
  }
  if (*solve_cmd) {
    const auto config = load(solve_src);
    return config ? famle::run_solve(*config) : famle::kExitConfig;
  }
  if (*verify_cmd) {
    const auto config = load(verify_src);
    return config ? famle::run_verify(*config, solution) : famle::kExitConfig;
  }
  const auto config = load(dist_src);
  if (!config) return famle::kExitConfig;
  std::pair<int, int> source;
  if (!parse_pair(source_text, source)) {
    std::cerr << "error: --source expects i,j\n";
    return famle::kExitConfig;
  }
  return famle::run_distance(*config, source);
}
