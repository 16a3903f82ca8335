#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <ostream>
#include <string>
#include <vector>

#include "spdhg/mri.hpp"
#include "spdhg/solvers.hpp"

namespace spdhg {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class TargetMode { oracle, long_run };

/// Full description of one reconstruction study. Defaults are the desk-scale
/// setup: 64x64, 4 coils, half the k-space rows, noise 0.05, alpha 1e-4.
struct ExperimentConfig {
  mri::MriConfig mri;
  std::vector<Algorithm> algorithms{Algorithm::spdhg, Algorithm::pdhg};
  double epochs = 100.0;
  std::vector<double> gamma_grid = default_gamma_grid();
  double log_every = 1.0;
  TargetMode target_mode = TargetMode::long_run;
  /// Epochs of the SPDHG target run; 0 means 10x `epochs`.
  double target_epochs = 0.0;
  std::filesystem::path output_dir = "spdhg_out";

  double resolved_target_epochs() const { return target_epochs > 0.0 ? target_epochs : 10.0 * epochs; }
  void validate() const;
};

/// Applies one `key = value` setting. Throws ConfigError for unknown keys or
/// malformed values.
void apply_setting(ExperimentConfig& config, const std::string& key, const std::string& value);

/// Parses a flat key=value file; '#' starts a comment.
ExperimentConfig parse_config(const std::string& text, ExperimentConfig base = {});
ExperimentConfig load_config(const std::filesystem::path& path);

/// Every resolved setting, as written to the manifest.
std::vector<std::pair<std::string, std::string>> describe(const ExperimentConfig& config);

inline const char* kCsvHeader =
    "run_id,algorithm,gamma,epoch,objective,relative_objective,distance_to_target,bregman_gap,"
    "wall_time_s,seed";

std::string csv_row(const std::string& run_id, const ConvergenceRecord& r);

/// 64-bit FNV-1a over the mask indices.
std::uint64_t mask_hash(const std::vector<Index>& indices);

struct AlgorithmOutcome {
  Algorithm algorithm = Algorithm::spdhg;
  double gamma = 0.0;
  std::vector<GammaTrial> search;
  std::vector<ConvergenceRecord> records;
  ComplexImage reconstruction;
};

struct ExperimentResult {
  ComplexImage target;
  double target_objective = 0.0;
  std::vector<AlgorithmOutcome> outcomes;
  std::vector<std::pair<std::string, std::string>> manifest;
};

/// Generates the instance, resolves the target, grid-searches gamma and runs
/// every algorithm, then writes convergence.csv, images and manifest.txt to
/// config.output_dir.
ExperimentResult run_experiment(const ExperimentConfig& config, std::ostream* log = nullptr);

/// Builds the instance and checks the step-size condition for every
/// algorithm and grid point. Returns true when all pass.
bool validate_experiment(const ExperimentConfig& config, std::ostream& out);

/// Solves the quadratic model exactly and reports its optimality residuals.
void oracle_report(const ExperimentConfig& config, std::ostream& out);

}  // namespace spdhg
