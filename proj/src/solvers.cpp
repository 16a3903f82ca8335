#include "spdhg/solvers.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "spdhg/theory.hpp"

namespace spdhg {

std::string to_string(Algorithm algorithm) {
  return algorithm == Algorithm::pdhg ? "pdhg" : "spdhg";
}

Algorithm parse_algorithm(const std::string& name) {
  if (name == "pdhg") return Algorithm::pdhg;
  if (name == "spdhg") return Algorithm::spdhg;
  throw std::invalid_argument("unknown algorithm '" + name + "' (expected pdhg or spdhg)");
}

SaddleProblem make_problem(std::vector<Block> blocks, FunctionalDescriptor g,
                           std::vector<double> probabilities, int norm_iters) {
  if (blocks.empty()) throw std::invalid_argument("make_problem: at least one block is required");
  const Shape domain = blocks.front().op.domain();
  for (std::size_t i = 1; i < blocks.size(); ++i)
    if (blocks[i].op.domain() != domain)
      throw ShapeError("make_problem: block " + std::to_string(i) + " has domain " +
                       to_string(blocks[i].op.domain()) + ", expected " + to_string(domain));

  const std::size_t n = blocks.size();
  if (probabilities.empty()) probabilities.assign(n, 1.0 / static_cast<double>(n));
  if (probabilities.size() != n)
    throw std::invalid_argument("make_problem: one probability per block is required");
  for (double p : probabilities)
    if (!(p > 0.0)) throw std::invalid_argument("make_problem: every probability must be > 0");
  const double total = std::accumulate(probabilities.begin(), probabilities.end(), 0.0);
  if (std::abs(total - 1.0) > 1e-12)
    throw std::invalid_argument("make_problem: probabilities must sum to 1");

  SaddleProblem problem;
  problem.g = std::move(g);
  problem.probabilities = std::move(probabilities);
  std::vector<LinearOperator> ops;
  for (std::size_t i = 0; i < n; ++i) {
    const auto& op = blocks[i].op;
    if (!op.norm_bound()) estimate_norm(op, norm_iters, 1e-10, 1000 + i);
    problem.block_norms.push_back(*op.norm_bound());
    ops.push_back(op);
  }
  problem.blocks = std::move(blocks);
  if (n == 1) {
    problem.stacked = ops.front();
  } else {
    problem.stacked = block_row(std::move(ops));
    estimate_norm(problem.stacked, norm_iters, 1e-10, 999);
  }
  problem.stacked_norm = *problem.stacked.norm_bound();
  return problem;
}

double objective(const SaddleProblem& problem, const ComplexImage& x) {
  double total = value(problem.g, x);
  for (const auto& b : problem.blocks) total += value(b.f, b.op.apply(x));
  return total;
}

ComplexImage stacked_adjoint(const SaddleProblem& problem, const std::vector<ComplexImage>& y) {
  ComplexImage out(problem.domain());
  for (std::size_t i = 0; i < problem.size(); ++i) out += problem.blocks[i].op.adjoint(y[i]);
  return out;
}

double contraction(const SaddleProblem& problem, const StepSizes& steps) {
  if (steps.algorithm == Algorithm::pdhg) {
    const double s = *std::max_element(steps.sigma.begin(), steps.sigma.end());
    return std::sqrt(steps.tau * s * problem.stacked_norm * problem.stacked_norm);
  }
  double worst = 0.0;
  for (std::size_t i = 0; i < problem.size(); ++i) {
    const double a = problem.block_norms[i];
    worst = std::max(worst, steps.tau * steps.sigma[i] * a * a / problem.probabilities[i]);
  }
  return std::sqrt(worst);
}

StepSizes compute_step_sizes(const SaddleProblem& problem, double gamma, Algorithm algorithm) {
  if (!(gamma > 0.0)) throw std::invalid_argument("compute_step_sizes: gamma must be > 0");
  for (std::size_t i = 0; i < problem.size(); ++i)
    if (!(problem.block_norms[i] > 0.0))
      throw std::invalid_argument("compute_step_sizes: block " + std::to_string(i) +
                                  " has zero operator norm");
  StepSizes steps;
  steps.algorithm = algorithm;
  steps.gamma = gamma;
  if (algorithm == Algorithm::pdhg) {
    const double a = problem.stacked_norm;
    steps.sigma.assign(problem.size(), gamma / a);
    steps.tau = 0.99 / (gamma * a);
  } else {
    const double amax = *std::max_element(problem.block_norms.begin(), problem.block_norms.end());
    for (std::size_t i = 0; i < problem.size(); ++i)
      steps.sigma.push_back(gamma * problem.probabilities[i] / problem.block_norms[i]);
    steps.tau = 0.99 / (gamma * amax);
  }
  return steps;
}

std::string StepViolation::message() const {
  std::ostringstream os;
  os.precision(17);
  if (block)
    os << "block " << *block << ": tau*sigma*||A||^2 = " << lhs << " is not < p = " << bound;
  else
    os << "stacked operator: tau*sigma*||A||^2 = " << lhs << " is not < " << bound;
  return os.str();
}

std::vector<StepViolation> validate_step_sizes(const SaddleProblem& problem, const StepSizes& steps) {
  std::vector<StepViolation> out;
  if (steps.sigma.size() != problem.size()) {
    out.push_back({std::nullopt, std::numeric_limits<double>::infinity(), 0.0});
    return out;
  }
  if (steps.algorithm == Algorithm::pdhg) {
    const double s = *std::max_element(steps.sigma.begin(), steps.sigma.end());
    const double lhs = steps.tau * s * problem.stacked_norm * problem.stacked_norm;
    if (!(lhs < 1.0)) out.push_back({std::nullopt, lhs, 1.0});
    return out;
  }
  for (std::size_t i = 0; i < problem.size(); ++i) {
    const double a = problem.block_norms[i];
    const double lhs = steps.tau * steps.sigma[i] * a * a;
    if (!(lhs < problem.probabilities[i])) out.push_back({i, lhs, problem.probabilities[i]});
  }
  return out;
}

SolverState initial_state(const SaddleProblem& problem, std::uint64_t seed,
                          std::optional<ComplexImage> x0) {
  SolverState s;
  s.x = x0 ? std::move(*x0) : ComplexImage(problem.domain());
  if (s.x.shape != problem.domain()) throw ShapeError("initial_state: x0 shape mismatch");
  for (const auto& b : problem.blocks) s.y.emplace_back(b.op.codomain());
  s.y_prev = s.y;
  s.z = ComplexImage(problem.domain());
  s.zbar = ComplexImage(problem.domain());
  s.rng.seed(seed);
  return s;
}

std::size_t draw_block(const std::vector<double>& probabilities, Rng& rng) {
  const double u = uniform01(rng);
  double cumulative = 0.0;
  for (std::size_t i = 0; i < probabilities.size(); ++i) {
    cumulative += probabilities[i];
    if (u < cumulative) return i;
  }
  return probabilities.size() - 1;
}

void spdhg_step_block(const SaddleProblem& problem, SolverState& state, const StepSizes& steps,
                      std::size_t j) {
  if (state.last_block) state.y_prev[*state.last_block] = state.y[*state.last_block];

  const Block& block = problem.blocks[j];
  state.x = prox_primal(problem.g, steps.tau, state.x - steps.tau * state.zbar);

  ComplexImage arg = block.op.apply(state.x);
  arg *= steps.sigma[j];
  arg += state.y[j];
  ComplexImage y_new = prox_dual(block.f, steps.sigma[j], arg);

  ComplexImage delta = block.op.adjoint(y_new - state.y[j]);
  state.z += delta;
  state.zbar = state.z;
  state.zbar.data += (1.0 / problem.probabilities[j]) * delta.data;

  state.y[j] = std::move(y_new);
  state.last_block = j;
  ++state.k;
}

void spdhg_step(const SaddleProblem& problem, SolverState& state, const StepSizes& steps) {
  spdhg_step_block(problem, state, steps, draw_block(problem.probabilities, state.rng));
}

void pdhg_step(const SaddleProblem& problem, SolverState& state, const StepSizes& steps) {
  state.x = prox_primal(problem.g, steps.tau, state.x - steps.tau * state.zbar);

  std::vector<ComplexImage> y_new;
  y_new.reserve(problem.size());
  ComplexImage z_new(problem.domain());
  for (std::size_t i = 0; i < problem.size(); ++i) {
    const Block& block = problem.blocks[i];
    ComplexImage arg = block.op.apply(state.x);
    arg *= steps.sigma[i];
    arg += state.y[i];
    y_new.push_back(prox_dual(block.f, steps.sigma[i], arg));
    z_new += block.op.adjoint(y_new.back());
  }

  state.zbar = 2.0 * z_new - state.z;
  state.z = std::move(z_new);
  state.y_prev = std::move(state.y);
  state.y = std::move(y_new);
  state.last_block.reset();
  ++state.k;
}

DivergenceError::DivergenceError(double g, double epoch, double objective)
    : std::runtime_error([&] {
        std::ostringstream os;
        os << "diverged with gamma = " << g << " at epoch " << epoch << " (objective " << objective
           << ")";
        return os.str();
      }()),
      gamma(g) {}

RunResult run(const SaddleProblem& problem, const StepSizes& steps, const RunOptions& options) {
  if (!(options.epochs >= 0.0)) throw std::invalid_argument("run: epochs must be >= 0");
  if (!(options.log_every > 0.0)) throw std::invalid_argument("run: log_every must be > 0");

  const auto start = std::chrono::steady_clock::now();
  const long long per_epoch =
      steps.algorithm == Algorithm::spdhg ? static_cast<long long>(problem.size()) : 1;
  const long long total = std::llround(options.epochs * static_cast<double>(per_epoch));
  const long long log_interval =
      std::max<long long>(1, std::llround(options.log_every * static_cast<double>(per_epoch)));

  RunResult result{{}, initial_state(problem, options.seed, options.x0)};
  SolverState& state = result.state;

  const double phi0 = objective(problem, state.x);
  std::optional<double> phi_target;
  double target_norm = 0.0;
  if (options.target) {
    phi_target = objective(problem, options.target->x);
    target_norm = norm(options.target->x);
  }
  const double limit =
      phi0 > 0.0 ? kDivergenceFactor * phi0 : std::numeric_limits<double>::infinity();

  auto log = [&](long long step, double phi) {
    ConvergenceRecord r;
    r.epoch = static_cast<double>(step) / static_cast<double>(per_epoch);
    r.objective = phi;
    if (phi_target) {
      const double denom = phi0 - *phi_target;
      if (denom != 0.0) r.relative_objective = step == 0 ? 1.0 : (phi - *phi_target) / denom;
      const double d = norm(state.x - options.target->x);
      r.distance_to_target = target_norm > 0.0 ? d / target_norm : d;
      if (options.target->saddle)
        r.bregman_gap = bregman_gap(problem, state.x, state.y, *options.target->saddle);
    }
    r.wall_time_s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    r.seed = options.seed;
    r.algorithm = steps.algorithm;
    r.gamma = steps.gamma;
    result.records.push_back(r);
  };

  log(0, phi0);
  for (long long step = 1; step <= total; ++step) {
    if (steps.algorithm == Algorithm::spdhg)
      spdhg_step(problem, state, steps);
    else
      pdhg_step(problem, state, steps);
    if (step % log_interval == 0 || step == total) {
      const double phi = objective(problem, state.x);
      if (!std::isfinite(phi) || phi > limit)
        throw DivergenceError(steps.gamma, static_cast<double>(step) / per_epoch, phi);
      log(step, phi);
    }
  }
  return result;
}

std::vector<double> default_gamma_grid() {
  std::vector<double> grid;
  for (int e = -5; e <= 5; ++e) grid.push_back(std::pow(10.0, e));
  return grid;
}

GammaSearchResult gamma_search(const SaddleProblem& problem, Algorithm algorithm,
                               const std::vector<double>& grid, double epochs, std::uint64_t seed,
                               std::optional<ComplexImage> x0) {
  if (grid.empty()) throw std::invalid_argument("gamma_search: empty grid");
  GammaSearchResult out;
  for (double gamma : grid) {
    GammaTrial trial;
    trial.gamma = gamma;
    RunOptions options;
    options.epochs = epochs;
    options.log_every = std::max(epochs, 1.0);
    options.seed = seed;
    options.x0 = x0;
    try {
      auto res = run(problem, compute_step_sizes(problem, gamma, algorithm), options);
      trial.records = std::move(res.records);
      trial.final_objective = trial.records.back().objective;
      trial.status = "ok";
    } catch (const DivergenceError& e) {
      trial.diverged = true;
      trial.final_objective = std::numeric_limits<double>::infinity();
      trial.status = e.what();
    }
    out.trials.push_back(std::move(trial));
  }

  const GammaTrial* best = nullptr;
  for (const auto& t : out.trials) {
    if (t.diverged) continue;
    if (!best || t.final_objective < best->final_objective ||
        (t.final_objective == best->final_objective && t.gamma < best->gamma))
      best = &t;
  }
  if (!best) {
    std::string msg = "gamma_search: every run diverged:";
    for (const auto& t : out.trials) msg += "\n  gamma " + std::to_string(t.gamma) + ": " + t.status;
    throw GammaSearchError(msg);
  }
  out.best_gamma = best->gamma;
  return out;
}

}  // namespace spdhg
