#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace gencal {

/// Resolved options for one command. Defaults, then the config file, then
/// flags given on the command line.
struct RunConfig {
  std::string command;
  std::uint64_t seed = 1;
  std::filesystem::path out_dir = "gencal-out";

  // simulate / demo
  std::size_t n_population = 1'000'000;
  std::size_t n_train = 5000;
  std::size_t n_valid = 1000;
  bool skip_gbm = false;
  bool full_grid = false;
  int cv_folds = 10;

  // assess
  std::filesystem::path pred_file;
  std::string family = "poisson";
  std::string link;  ///< empty: canonical link of the family
  std::string name = "assessment";

  // assessment options
  double span = 0.75;
  int degree = 2;
  int bins = 10;
  int grid_points = 101;
  int histogram_bins = 30;

  /// Worker threads. Not part of the manifest: outputs do not depend on it.
  unsigned threads = 1;
};

/// Applies `key = value` lines (`#` comments, blank lines ignored). Keys
/// are the long flag names; '_' and '-' are interchangeable. Throws
/// ValidationError naming the line on unknown keys or bad values.
void apply_config_text(RunConfig& config, std::string_view text);

/// Sets one option from its textual value.
void set_option(RunConfig& config, std::string_view key, std::string_view value);

/// Config text that reproduces `config` (the run manifest).
std::string manifest_text(const RunConfig& config);

/// Process exit codes.
enum ExitCode : int { kExitOk = 0, kExitValidation = 2, kExitNumerical = 3, kExitIo = 4 };

/// Maps the in-flight exception to an exit code and prints it to `err`.
int report_exception(std::ostream& err);

/// Writes population.csv, train.csv, valid.csv and run-manifest.txt.
int cmd_simulate(const RunConfig& config, std::ostream& log);

/// Assesses a `y,mu_hat` file; writes <name>.svg, <name>.json,
/// <name>_curves.csv, <name>_bins.csv and run-manifest.txt. Returns
/// kExitNumerical if any estimator failed (outputs are still written).
int cmd_assess(const RunConfig& config, std::ostream& log);

struct DemoRow {
  std::string model;
  bool skipped = false;
  bool ok = false;
  double zeta = 0.0;
  double zeta_se = 0.0;
  double alpha_c = 0.0;
  double alpha_c_se = 0.0;
  std::string note;
};

/// Full replication: simulate, fit models 1-3 and GBMs 1-3, assess the
/// true-mean predictions and all six models, write one output set per
/// model plus comparison.csv.
std::vector<DemoRow> run_demo(const RunConfig& config, std::ostream& log);
int cmd_demo(const RunConfig& config, std::ostream& log);

/// Reduced CV grid used by the demo unless full_grid is set.
std::vector<int> demo_tree_grid(bool full);
std::vector<int> demo_depth_grid(bool full);

}  // namespace gencal
