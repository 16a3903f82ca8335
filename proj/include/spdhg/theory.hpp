#pragma once

#include <vector>

#include "spdhg/solvers.hpp"

namespace spdhg {

/// tau, sigma_i and p_i with the weighted norms they induce:
/// ||x||^2_{1/tau} = <x,x>/tau and ||y||^2_{QS^-1} = sum_i <y_i,y_i>/(p_i sigma_i).
struct TheoryWeights {
  double tau = 0.0;
  std::vector<double> sigma;
  std::vector<double> p;

  static TheoryWeights from(const SaddleProblem& problem, const StepSizes& steps);

  double primal_norm2(const ComplexImage& x) const;
  double dual_norm2(const std::vector<ComplexImage>& y) const;
};

/// V(x, y) = ||x||^2_{1/tau} + 2 <Q A x, y> + ||y||^2_{QS^-1}
double v_value(const SaddleProblem& problem, const TheoryWeights& weights, const ComplexImage& x,
               const std::vector<ComplexImage>& y);

/// V^k(x, y) = ||x||^2_{1/tau} - 2 <Q A x, y^k - y^{k-1}> + ||y^k - y^{k-1}||^2_{QS^-1}
///             + ||y||^2_{QS^-1}, with y^k, y^{k-1} taken from `state`.
double vk_value(const SaddleProblem& problem, const TheoryWeights& weights, const SolverState& state,
                const PrimalDual& w);

/// Delta^k = V^k(w^k - w^)
double lyapunov_delta(const SaddleProblem& problem, const TheoryWeights& weights,
                      const SolverState& state, const PrimalDual& saddle);

struct DescentCheck {
  double lhs = 0.0;  // Delta^k
  double rhs = 0.0;  // E^{k+1} Delta^{k+1} + V(x^{k+1} - x^k, y^k - y^{k-1})
  double expected_next = 0.0;
  double v_term = 0.0;
};

/// Evaluates both sides of the one-step descent inequality at `state`. The
/// conditional expectation is exact: every dual branch j is stepped and
/// weighted by p_j. Throws std::invalid_argument if `saddle` is not a fixed
/// point of every T_j to 1e-6.
DescentCheck expected_next_delta(const SaddleProblem& problem, const SolverState& state,
                                 const StepSizes& steps, const PrimalDual& saddle);

/// T_j: dual block j is updated from x first, then the primal coordinate is
/// prox_{tau g}(x - tau A^T y - (1 + 1/p_j) tau A_j^T ((T_j w)_j - y_j)).
PrimalDual apply_T(const SaddleProblem& problem, const StepSizes& steps, std::size_t j,
                   const PrimalDual& w);

/// Euclidean distance between two primal-dual points.
double distance(const PrimalDual& a, const PrimalDual& b);

/// max_j ||T_j w - w||
double fixed_point_residual(const SaddleProblem& problem, const StepSizes& steps,
                            const PrimalDual& w);

/// D_g^{-A^T y^}(x, x^) + sum_i D_{f_i^*}^{A_i x^}(y_i, y^_i). +inf when y is
/// outside dom f^*.
double bregman_gap(const SaddleProblem& problem, const ComplexImage& x,
                   const std::vector<ComplexImage>& y, const PrimalDual& saddle);

}  // namespace spdhg
