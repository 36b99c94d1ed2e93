// wloja: run experiments, sweeps and plots from JSON configs.
#include <cstdlib>
#include <iostream>

#include <CLI11.hpp>

#include "wloja/experiment.hpp"

namespace fs = std::filesystem;

namespace {

fs::path output_root() {
  if (const char* env = std::getenv("WLOJA_OUT"); env && *env) return env;
  return "runs";
}

void report(const nlohmann::ordered_json& summary, bool quiet) {
  if (quiet) return;
  const auto print_one = [](const nlohmann::ordered_json& s) {
    std::cout << s.value("name", std::string("?")) << ": " << s.value("status", std::string("?"));
    if (s.contains("checks")) {
      long passed = 0, total = 0;
      for (const auto& c : s["checks"]) {
        ++total;
        if (c["pass"].get<bool>()) ++passed;
      }
      std::cout << " (" << passed << "/" << total << " checks)";
    }
    if (s.contains("error") && s["error"].is_string() && !s["error"].get<std::string>().empty()) {
      std::cout << ": " << s["error"].get<std::string>();
    }
    std::cout << '\n';
  };
  if (summary.contains("entries")) {
    for (const auto& e : summary["entries"]) print_one(e);
  } else {
    print_one(summary);
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Wasserstein gradient flows and Lojasiewicz inequality checks in 1D"};
  app.require_subcommand(1);

  std::string out;
  std::optional<std::uint64_t> seed;
  bool quiet = false;
  app.add_option("--out", out, "Output directory (default: $WLOJA_OUT or ./runs, plus the config's output)");
  app.add_option("--seed", seed, "Override the config seed");
  app.add_flag("-q,--quiet", quiet, "Suppress progress and warnings");

  std::string config_path;
  auto* run_cmd = app.add_subcommand("run", "Run one experiment config");
  run_cmd->add_option("config", config_path, "Experiment JSON")->required();

  std::string sweep_dir;
  auto* sweep_cmd = app.add_subcommand("sweep", "Run every *.json config in a directory");
  sweep_cmd->add_option("dir", sweep_dir, "Directory of configs")->required()->check(CLI::ExistingDirectory);

  std::string plot_dir;
  auto* plot_cmd = app.add_subcommand("plot", "Write plot.svg for a run directory");
  plot_cmd->add_option("run-dir", plot_dir, "Run directory with trajectory.csv")->required();

  for (auto* sub : {run_cmd, sweep_cmd, plot_cmd}) sub->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : wloja::exit_config_error;
  }

  if (quiet) wloja::set_warning_handler([](std::string_view) {});

  wloja::RunOptions options;
  options.seed = seed;
  options.quiet = quiet;

  try {
    if (*plot_cmd) {
      wloja::plot_run(plot_dir);
      if (!quiet) std::cout << (fs::path(plot_dir) / "plot.svg").string() << '\n';
      return wloja::exit_ok;
    }
    if (*sweep_cmd) {
      options.output_dir = out.empty() ? output_root() / ("sweep-" + fs::path(sweep_dir).filename().string()) : fs::path(out);
      const auto result = wloja::run_sweep(wloja::sweep_directory(sweep_dir), options);
      report(result.summary, quiet);
      return result.exit_code;
    }
    wloja::ExperimentConfig config;
    try {
      config = wloja::load_config(config_path);
    } catch (const wloja::ConfigError& e) {
      std::cerr << "wloja: config error: " << e.what() << '\n';
      return wloja::exit_config_error;
    }
    const fs::path target = config.output.empty() ? fs::path(config.name) : fs::path(config.output);
    options.output_dir = !out.empty() ? fs::path(out) : (target.is_absolute() ? target : output_root() / target);
    if (config.kind == "sweep") {
      std::vector<wloja::SweepChild> children;
      for (const auto& c : config.sweep) children.push_back({"", c, ""});
      const auto result = wloja::run_sweep(children, options);
      report(result.summary, quiet);
      return result.exit_code;
    }
    const auto result = wloja::run(config, options);
    report(result.summary, quiet);
    if (!quiet) std::cout << "output: " << options.output_dir.string() << '\n';
    return result.exit_code;
  } catch (const wloja::ConfigError& e) {
    std::cerr << "wloja: config error: " << e.what() << '\n';
    return wloja::exit_config_error;
  } catch (const std::exception& e) {
    std::cerr << "wloja: " << e.what() << '\n';
    return wloja::exit_numerical_failure;
  }
}
