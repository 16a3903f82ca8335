#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "spdhg/image.hpp"

namespace spdhg {

enum class OperatorKind { dft2, mask, coil_multiply, gradient, scaled_identity, compose, block_row };

std::string to_string(OperatorKind kind);

/// Immutable linear map between complex grid arrays.
///
/// A LinearOperator is a cheap handle onto a shared node; copies share the
/// cached norm bound. apply/adjoint are const and safe to call concurrently.
class LinearOperator {
 public:
  class Node;

  LinearOperator() = default;
  explicit LinearOperator(std::shared_ptr<const Node> node) : node_(std::move(node)) {}

  OperatorKind kind() const;
  const Shape& domain() const;
  const Shape& codomain() const;
  std::string describe() const;

  ComplexImage apply(const ComplexImage& x) const;
  ComplexImage adjoint(const ComplexImage& y) const;

  /// Upper bound on the operator norm, if one has been computed or set.
  std::optional<double> norm_bound() const;
  /// Idempotent cache write; concurrent writers of the same value are fine.
  void cache_norm_bound(double bound) const;

  /// Child operators for compose (outermost first) and block_row.
  const std::vector<LinearOperator>& children() const;
  /// Start offset of each block inside the block_row codomain, plus the total.
  std::vector<Index> block_offsets() const;

  explicit operator bool() const { return static_cast<bool>(node_); }

 private:
  std::shared_ptr<const Node> node_;
};

inline ComplexImage apply(const LinearOperator& op, const ComplexImage& x) { return op.apply(x); }
inline ComplexImage adjoint(const LinearOperator& op, const ComplexImage& y) {
  return op.adjoint(y);
}

// Factories. Each validates its shapes and throws ShapeError on mismatch.

/// Orthonormal 2-D DFT (unshifted, scaled by 1/sqrt(rows*cols)).
LinearOperator dft2(Shape shape);
/// Selects the listed flat indices; the adjoint zero-fills.
LinearOperator mask(Shape domain, std::vector<Index> indices);
/// Pointwise multiplication by a coil map.
LinearOperator coil_multiply(ComplexImage map);
/// Forward differences with Neumann boundary; codomain has 2 channels
/// (channel 0 differences along rows, channel 1 along columns).
LinearOperator gradient(Shape shape);
LinearOperator scaled_identity(Shape shape, double scale);
/// chain[0] o chain[1] o ... ; chain.back() is applied first.
LinearOperator compose(std::vector<LinearOperator> chain);
/// Stacks x -> (A_1 x, ..., A_n x) into one flat codomain.
LinearOperator block_row(std::vector<LinearOperator> blocks);

/// Declarative operator description, consumed by build().
struct OperatorDescription {
  OperatorKind kind = OperatorKind::scaled_identity;
  Shape shape;                      // domain shape for leaf kinds
  std::vector<Index> indices;       // mask
  ComplexImage coil;                // coil_multiply
  double scale = 1.0;               // scaled_identity
  std::vector<OperatorDescription> children;  // compose / block_row
};

LinearOperator build(const OperatorDescription& description);

struct NormEstimate {
  double value = 0.0;
  bool converged = false;
  int iterations = 0;
};

inline constexpr double kNormSafetyFactor = 1.0 + 1e-6;

/// Power iteration on A^T A from a seeded random start. Stops when successive
/// estimates agree to `tol` relatively. Caches value * kNormSafetyFactor into
/// the operator's norm bound.
NormEstimate estimate_norm(const LinearOperator& op, int max_iters = 1000, double tol = 1e-10,
                           unsigned long long seed = 0);

/// Cached bound if present, otherwise runs estimate_norm with defaults.
double norm_bound(const LinearOperator& op);

}  // namespace spdhg
