#include "spdhg/theory.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace spdhg {

namespace {

std::vector<ComplexImage> difference(const std::vector<ComplexImage>& a,
                                     const std::vector<ComplexImage>& b) {
  std::vector<ComplexImage> out;
  out.reserve(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out.push_back(a[i] - b[i]);
  return out;
}

// <Q A x, y> = sum_i <A_i x, y_i> / p_i
double coupling(const SaddleProblem& problem, const TheoryWeights& w, const ComplexImage& x,
                const std::vector<ComplexImage>& y) {
  double total = 0.0;
  for (std::size_t i = 0; i < problem.size(); ++i)
    total += inner(problem.blocks[i].op.apply(x), y[i]) / w.p[i];
  return total;
}

}  // namespace

TheoryWeights TheoryWeights::from(const SaddleProblem& problem, const StepSizes& steps) {
  return {steps.tau, steps.sigma, problem.probabilities};
}

double TheoryWeights::primal_norm2(const ComplexImage& x) const { return squared_norm(x) / tau; }

double TheoryWeights::dual_norm2(const std::vector<ComplexImage>& y) const {
  double total = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) total += squared_norm(y[i]) / (p[i] * sigma[i]);
  return total;
}

double v_value(const SaddleProblem& problem, const TheoryWeights& weights, const ComplexImage& x,
               const std::vector<ComplexImage>& y) {
  return weights.primal_norm2(x) + 2.0 * coupling(problem, weights, x, y) + weights.dual_norm2(y);
}

double vk_value(const SaddleProblem& problem, const TheoryWeights& weights, const SolverState& state,
                const PrimalDual& w) {
  const auto dy = difference(state.y, state.y_prev);
  return weights.primal_norm2(w.x) - 2.0 * coupling(problem, weights, w.x, dy) +
         weights.dual_norm2(dy) + weights.dual_norm2(w.y);
}

double lyapunov_delta(const SaddleProblem& problem, const TheoryWeights& weights,
                      const SolverState& state, const PrimalDual& saddle) {
  return vk_value(problem, weights, state,
                  PrimalDual{state.x - saddle.x, difference(state.y, saddle.y)});
}

DescentCheck expected_next_delta(const SaddleProblem& problem, const SolverState& state,
                                 const StepSizes& steps, const PrimalDual& saddle) {
  const double residual = fixed_point_residual(problem, steps, saddle);
  if (!(residual <= 1e-6))
    throw std::invalid_argument("expected_next_delta: supplied point is not a saddle (T_j residual " +
                                std::to_string(residual) + ")");

  const TheoryWeights weights = TheoryWeights::from(problem, steps);
  DescentCheck out;
  out.lhs = lyapunov_delta(problem, weights, state, saddle);

  ComplexImage x_next;
  for (std::size_t j = 0; j < problem.size(); ++j) {
    SolverState branch = state;
    spdhg_step_block(problem, branch, steps, j);
    out.expected_next += problem.probabilities[j] * lyapunov_delta(problem, weights, branch, saddle);
    if (j == 0) x_next = branch.x;
  }
  out.v_term = v_value(problem, weights, x_next - state.x, difference(state.y, state.y_prev));
  out.rhs = out.expected_next + out.v_term;
  return out;
}

PrimalDual apply_T(const SaddleProblem& problem, const StepSizes& steps, std::size_t j,
                   const PrimalDual& w) {
  if (j >= problem.size()) throw std::out_of_range("apply_T: block index out of range");
  const Block& block = problem.blocks[j];

  PrimalDual out{ComplexImage(), w.y};
  ComplexImage arg = block.op.apply(w.x);
  arg *= steps.sigma[j];
  arg += w.y[j];
  out.y[j] = prox_dual(block.f, steps.sigma[j], arg);

  ComplexImage v = w.x - steps.tau * stacked_adjoint(problem, w.y);
  const double extrapolation = (1.0 + 1.0 / problem.probabilities[j]) * steps.tau;
  v -= extrapolation * block.op.adjoint(out.y[j] - w.y[j]);
  out.x = prox_primal(problem.g, steps.tau, v);
  return out;
}

double distance(const PrimalDual& a, const PrimalDual& b) {
  double total = squared_norm(a.x - b.x);
  for (std::size_t i = 0; i < a.y.size(); ++i) total += squared_norm(a.y[i] - b.y[i]);
  return std::sqrt(total);
}

double fixed_point_residual(const SaddleProblem& problem, const StepSizes& steps,
                            const PrimalDual& w) {
  double worst = 0.0;
  for (std::size_t j = 0; j < problem.size(); ++j)
    worst = std::max(worst, distance(apply_T(problem, steps, j, w), w));
  return worst;
}

double bregman_gap(const SaddleProblem& problem, const ComplexImage& x,
                   const std::vector<ComplexImage>& y, const PrimalDual& saddle) {
  // D_g^{-A^T y^}(x, x^) = g(x) - g(x^) + <A^T y^, x - x^>
  double gap = value(problem.g, x) - value(problem.g, saddle.x) +
               inner(stacked_adjoint(problem, saddle.y), x - saddle.x);
  for (std::size_t i = 0; i < problem.size(); ++i) {
    const Block& b = problem.blocks[i];
    const double fy = conjugate_value(b.f, y[i]);
    if (std::isinf(fy)) return std::numeric_limits<double>::infinity();
    gap += fy - conjugate_value(b.f, saddle.y[i]) - inner(b.op.apply(saddle.x), y[i] - saddle.y[i]);
  }
  return gap;
}

}  // namespace spdhg
