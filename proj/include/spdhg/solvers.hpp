#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "spdhg/image.hpp"
#include "spdhg/linops.hpp"
#include "spdhg/prox.hpp"
#include "spdhg/random.hpp"

namespace spdhg {

enum class Algorithm { pdhg, spdhg };

std::string to_string(Algorithm algorithm);
Algorithm parse_algorithm(const std::string& name);

/// One dual block: the pair (A_i, f_i).
struct Block {
  LinearOperator op;
  FunctionalDescriptor f;
};

/// min_x sum_i f_i(A_i x) + g(x), in saddle form with dual blocks y_i.
struct SaddleProblem {
  std::vector<Block> blocks;
  FunctionalDescriptor g;
  std::vector<double> probabilities;
  /// Cached (inflated) bounds on ||A_i||.
  std::vector<double> block_norms;
  /// The stacked operator A x = (A_1 x, ..., A_n x) and its cached norm bound.
  LinearOperator stacked;
  double stacked_norm = 0.0;

  std::size_t size() const { return blocks.size(); }
  const Shape& domain() const { return blocks.front().op.domain(); }
};

/// Builds a problem, estimating any norm bound not already cached on the
/// operators. Empty `probabilities` means uniform sampling.
SaddleProblem make_problem(std::vector<Block> blocks, FunctionalDescriptor g,
                           std::vector<double> probabilities = {}, int norm_iters = 1000);

/// sum_i f_i(A_i x) + g(x)
double objective(const SaddleProblem& problem, const ComplexImage& x);

/// A^T y = sum_i A_i^T y_i
ComplexImage stacked_adjoint(const SaddleProblem& problem, const std::vector<ComplexImage>& y);

/// A primal-dual point w = (x, y_1, ..., y_n).
struct PrimalDual {
  ComplexImage x;
  std::vector<ComplexImage> y;
};

struct StepSizes {
  Algorithm algorithm = Algorithm::spdhg;
  double tau = 0.0;
  std::vector<double> sigma;
  double gamma = 1.0;
};

/// sqrt(max_i tau sigma_i ||A_i||^2 / p_i); for pdhg, sqrt(tau sigma ||A||^2).
double contraction(const SaddleProblem& problem, const StepSizes& steps);

/// spdhg: sigma_i = gamma p_i / ||A_i||, tau = 0.99 / (gamma max_i ||A_i||).
/// pdhg:  sigma = gamma / ||A||,         tau = 0.99 / (gamma ||A||).
StepSizes compute_step_sizes(const SaddleProblem& problem, double gamma, Algorithm algorithm);

struct StepViolation {
  std::optional<std::size_t> block;  // unset for the stacked pdhg condition
  double lhs = 0.0;                  // tau sigma_i ||A_i||^2
  double bound = 0.0;                // p_i (1 for pdhg)
  std::string message() const;
};

/// Checks tau sigma_i ||A_i||^2 < p_i (strict) with the cached norm bounds.
std::vector<StepViolation> validate_step_sizes(const SaddleProblem& problem, const StepSizes& steps);

struct SolverState {
  ComplexImage x;
  std::vector<ComplexImage> y;
  std::vector<ComplexImage> y_prev;  // y^{k-1}; equals y at k = 0
  ComplexImage z;                    // A^T y
  ComplexImage zbar;                 // extrapolated A^T y used by the next primal step
  long long k = 0;
  std::optional<std::size_t> last_block;
  Rng rng;
};

/// y = 0, z = zbar = 0, x = x0 (zero image by default).
SolverState initial_state(const SaddleProblem& problem, std::uint64_t seed,
                          std::optional<ComplexImage> x0 = std::nullopt);

std::size_t draw_block(const std::vector<double>& probabilities, Rng& rng);

/// One SPDHG iteration with a random block drawn from state.rng.
void spdhg_step(const SaddleProblem& problem, SolverState& state, const StepSizes& steps);
/// One SPDHG iteration with the dual block fixed to `j` (no draw).
void spdhg_step_block(const SaddleProblem& problem, SolverState& state, const StepSizes& steps,
                      std::size_t j);
void pdhg_step(const SaddleProblem& problem, SolverState& state, const StepSizes& steps);

struct ConvergenceRecord {
  double epoch = 0.0;
  double objective = 0.0;
  std::optional<double> relative_objective;
  std::optional<double> distance_to_target;
  std::optional<double> bregman_gap;
  double wall_time_s = 0.0;
  std::uint64_t seed = 0;
  Algorithm algorithm = Algorithm::spdhg;
  double gamma = 1.0;
};

/// Reference solution for logging: x* for the relative objective and
/// distance, and optionally a saddle point (x^, y^) for the Bregman gap.
struct Target {
  ComplexImage x;
  std::optional<PrimalDual> saddle;
};

struct RunOptions {
  double epochs = 100.0;
  double log_every = 1.0;
  std::optional<Target> target;
  std::uint64_t seed = 0;
  std::optional<ComplexImage> x0;
};

struct RunResult {
  std::vector<ConvergenceRecord> records;
  SolverState state;
};

class DivergenceError : public std::runtime_error {
 public:
  DivergenceError(double gamma, double epoch, double objective);
  double gamma;
};

inline constexpr double kDivergenceFactor = 1e12;

/// An epoch is n SPDHG steps or one PDHG step. Logs at epoch 0, every
/// `log_every` epochs and at the end.
RunResult run(const SaddleProblem& problem, const StepSizes& steps, const RunOptions& options);

/// Raised by gamma_search when no grid point converged.
class GammaSearchError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct GammaTrial {
  double gamma = 0.0;
  bool diverged = false;
  std::string status;
  double final_objective = 0.0;
  std::vector<ConvergenceRecord> records;
};

struct GammaSearchResult {
  double best_gamma = 0.0;
  std::vector<GammaTrial> trials;
};

/// 10^-5, 10^-4, ..., 10^5
std::vector<double> default_gamma_grid();

/// Runs every gamma for `epochs` with the same seed and returns the one with
/// the lowest final objective. Diverged runs rank last; ties go to the smaller
/// gamma. Throws GammaSearchError if every run diverged.
GammaSearchResult gamma_search(const SaddleProblem& problem, Algorithm algorithm,
                               const std::vector<double>& grid, double epochs, std::uint64_t seed,
                               std::optional<ComplexImage> x0 = std::nullopt);

}  // namespace spdhg
