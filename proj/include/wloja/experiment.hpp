#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "wloja/flows.hpp"
#include "wloja/potentials.hpp"

namespace wloja {

struct GridSpec {
  double x_min = -8;
  double x_max = 8;
  long n = 800;
};

struct PotentialSpec {
  std::string name = "quadratic";
  builtin::Params params;
};

/// family: relative_entropy | relative_internal | internal_plus_potential | potential_only.
/// relative_internal uses the Gibbs measure of the potential as reference.
struct FunctionalSpec {
  std::string family = "relative_entropy";
  std::string kernel = "boltzmann";
  double m = 2;
};

/// type: gaussian | uniform | atoms | file | equilibrium.
struct InitialSpec {
  std::string type = "gaussian";
  double mean = 0;
  double sigma = 1;
  double a = -1;
  double b = 1;
  std::vector<std::pair<double, double>> atoms;
  std::string path;
};

struct LojaSpec {
  std::optional<double> theta;
  std::optional<double> c_g;
  std::optional<double> c_f;
  std::optional<double> r0;
  /// Take c_g^2 = 2 K exp(-osc V2) from the potential's decomposition.
  bool holley_stroock = false;
  double tolerance = 0.05;
};

/// type: lsi_talagrand | gn_ohta | holley_stroock.
/// samples: perturbed_gaussian | gaussian | initial.
struct InequalitySpec {
  std::string type = "lsi_talagrand";
  std::string samples = "perturbed_gaussian";
  long count = 100;
  std::vector<double> means;
  std::vector<double> sigmas;
  std::optional<double> m;
  double tolerance = 1e-3;
};

/// source: dirac_path | trajectory.
struct EstimateSpec {
  std::string source = "dirac_path";
  std::vector<double> t{0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9};
};

struct ExperimentConfig {
  std::string kind = "flow";
  std::string name = "experiment";
  GridSpec grid;
  PotentialSpec potential;
  FunctionalSpec functional;
  InitialSpec initial;
  SolverControls<double> solver;
  /// Flow snapshots compared against the inequality pair of the functional.
  bool inequality_checks = false;
  LojaSpec loja;
  InequalitySpec inequality;
  EstimateSpec estimate;
  std::uint64_t seed = 0;
  std::string output;
  bool plot = true;
  bool write_snapshots = true;
  /// Children of a sweep, kept unparsed so one bad entry fails alone.
  std::vector<nlohmann::ordered_json> sweep;
  std::string source;
};

/// Parses and validates a configuration; ConfigError carries the field path.
ExperimentConfig parse_config(const nlohmann::ordered_json& j, const std::string& source = "<config>");
/// Reads a JSON file; syntax errors report line and column.
nlohmann::ordered_json read_json_file(const std::string& path);
ExperimentConfig load_config(const std::string& path);

/// Expands a sweep config into its children (base + vary, or a configs list).
std::vector<nlohmann::ordered_json> expand_sweep(const nlohmann::ordered_json& j, const std::string& source);

enum ExitCode : int { exit_ok = 0, exit_check_failed = 1, exit_config_error = 2, exit_numerical_failure = 3 };

struct RunOptions {
  std::filesystem::path output_dir;
  std::optional<std::uint64_t> seed;
  bool quiet = false;
};

struct RunResult {
  int exit_code = exit_ok;
  nlohmann::ordered_json summary;
};

/// Runs one experiment, writing CSVs, summary.json and optional SVGs into
/// options.output_dir. Never throws for configuration or numerical failures;
/// those are reported through the exit code and summary.
RunResult run(const ExperimentConfig& config, const RunOptions& options);

/// One sweep entry: a config object, or the reason it could not be loaded.
struct SweepChild {
  std::string label;
  std::optional<nlohmann::ordered_json> config;
  std::string load_error;
};

/// Runs every child concurrently in its own numbered subdirectory and merges
/// the summaries in index order into summary.json and summary.csv. A failing
/// child is recorded and does not stop the others.
RunResult run_sweep(const std::vector<SweepChild>& children, const RunOptions& options);

/// Children of a sweep directory: its *.json files in name order.
std::vector<SweepChild> sweep_directory(const std::filesystem::path& dir);

/// Writes plot.svg for a run directory containing trajectory.csv.
void plot_run(const std::filesystem::path& run_dir);

}  // namespace wloja
