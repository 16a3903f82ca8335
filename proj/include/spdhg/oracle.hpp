#pragma once

#include <Eigen/Dense>

#include "spdhg/linops.hpp"
#include "spdhg/solvers.hpp"

namespace spdhg {

using DenseMatrix = Eigen::MatrixXd;

/// Refuses to materialize more entries than this.
inline constexpr Index kMaterializeLimit = 1'000'000;

/// Real matrix of `op` acting on the interleaved R^{2d} view: column j is the
/// real view of apply(op, e_j).
DenseMatrix materialize(const LinearOperator& op);
/// Same, for the adjoint map (should equal the transpose of materialize).
DenseMatrix materialize_adjoint(const LinearOperator& op);

/// Largest singular value of the materialized matrix.
double exact_norm(const LinearOperator& op);

/// Exact saddle point of the quadratic model: every f_i = ||. - b_i||^2 and
/// g = alpha ||.||^2 (or zero). Solves (sum_i A_i^T A_i + alpha I) x = sum_i A_i^T b_i
/// densely, sets y_i = 2 (A_i x - b_i), and checks that the pair is a fixed
/// point of every T_j before returning.
PrimalDual solve_quadratic(const SaddleProblem& problem);

}  // namespace spdhg
