#include "spdhg/oracle.hpp"

#include <stdexcept>
#include <string>

#include "spdhg/theory.hpp"

namespace spdhg {

namespace {

void guard(Index rows, Index cols) {
  if (rows * cols > kMaterializeLimit)
    throw std::length_error("materialize: " + std::to_string(rows) + "x" + std::to_string(cols) +
                            " exceeds the dense size limit");
}

template <typename Map>
DenseMatrix columns(const Shape& in, const Shape& out, Map&& map) {
  const Index n = 2 * in.size();
  const Index m = 2 * out.size();
  guard(m, n);
  DenseMatrix M(m, n);
  ComplexImage e(in);
  for (Index j = 0; j < n; ++j) {
    e.real().setZero();
    e.real()[j] = 1.0;
    M.col(j) = map(e).real();
  }
  return M;
}

}  // namespace

DenseMatrix materialize(const LinearOperator& op) {
  return columns(op.domain(), op.codomain(), [&](const ComplexImage& e) { return op.apply(e); });
}

DenseMatrix materialize_adjoint(const LinearOperator& op) {
  return columns(op.codomain(), op.domain(), [&](const ComplexImage& e) { return op.adjoint(e); });
}

double exact_norm(const LinearOperator& op) {
  const DenseMatrix M = materialize(op);
  if (M.size() == 0) return 0.0;
  Eigen::BDCSVD<DenseMatrix> svd(M);
  return svd.singularValues()(0);
}

PrimalDual solve_quadratic(const SaddleProblem& problem) {
  double alpha = 0.0;
  if (problem.g.family == Family::squared_norm)
    alpha = problem.g.alpha;
  else if (problem.g.family != Family::zero)
    throw std::invalid_argument("solve_quadratic: g must be a squared norm");
  for (const auto& b : problem.blocks)
    if (b.f.family != Family::squared_distance)
      throw std::invalid_argument("solve_quadratic: every f_i must be a squared distance");

  const Index d = 2 * problem.domain().size();
  DenseMatrix H = alpha * DenseMatrix::Identity(d, d);
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(d);
  std::vector<DenseMatrix> mats;
  for (const auto& b : problem.blocks) {
    mats.push_back(materialize(b.op));
    H.noalias() += mats.back().transpose() * mats.back();
    rhs.noalias() += mats.back().transpose() * b.f.b;
  }

  Eigen::LDLT<DenseMatrix> ldlt(H);
  const Eigen::VectorXd pivots = ldlt.vectorD();
  const double scale = std::max(1.0, pivots.cwiseAbs().maxCoeff());
  if (ldlt.info() != Eigen::Success || pivots.minCoeff() <= 1e-12 * scale)
    throw std::runtime_error(
        "solve_quadratic: normal equations are singular; use a regularizer with alpha > 0");

  PrimalDual saddle;
  saddle.x = ComplexImage::from_real(problem.domain(), ldlt.solve(rhs));
  for (std::size_t i = 0; i < problem.size(); ++i) {
    const auto& b = problem.blocks[i];
    Eigen::VectorXd yi = 2.0 * (mats[i] * saddle.x.real() - b.f.b);
    saddle.y.push_back(ComplexImage::from_real(b.op.codomain(), yi));
  }

  const double residual =
      fixed_point_residual(problem, compute_step_sizes(problem, 1.0, Algorithm::spdhg), saddle);
  if (!(residual < 1e-8))
    throw std::runtime_error("solve_quadratic: fixed-point residual " + std::to_string(residual) +
                             " exceeds 1e-8");
  return saddle;
}

}  // namespace spdhg
