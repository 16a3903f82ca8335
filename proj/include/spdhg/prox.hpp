#pragma once

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "spdhg/image.hpp"

namespace spdhg {

/// Functional families used by the saddle problems. All operate on the real
/// view of an array.
enum class Family {
  zero,              // f(v) = 0
  squared_distance,  // f(v) = ||v - b||^2  (no 1/2 factor)
  squared_norm,      // f(v) = alpha ||v||^2
  group_l1,          // f(v) = alpha * sum_groups ||v_group||_2
};

std::string to_string(Family family);

class UnsupportedProx : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Membership tolerance for the indicator-type conjugates.
inline constexpr double kDomainTolerance = 1e-9;

template <typename Scalar>
struct Functional {
  Family family = Family::zero;
  Scalar alpha = Scalar(0);
  VectorX<Scalar> b;      // squared_distance data
  Index group_size = 1;   // group_l1, in real entries

  static Functional zero() { return {}; }

  static Functional squared_distance(VectorX<Scalar> data) {
    Functional f;
    f.family = Family::squared_distance;
    f.b = std::move(data);
    return f;
  }

  static Functional squared_distance(const BasicImage<Scalar>& data) {
    return squared_distance(VectorX<Scalar>(data.real()));
  }

  static Functional squared_norm(Scalar a) {
    if (a < Scalar(0)) throw std::invalid_argument("squared_norm: alpha must be >= 0");
    Functional f;
    f.family = Family::squared_norm;
    f.alpha = a;
    return f;
  }

  static Functional group_l1(Scalar a, Index size) {
    if (a < Scalar(0)) throw std::invalid_argument("group_l1: alpha must be >= 0");
    if (size < 1) throw std::invalid_argument("group_l1: group size must be >= 1");
    Functional f;
    f.family = Family::group_l1;
    f.alpha = a;
    f.group_size = size;
    return f;
  }
};

namespace detail {

template <typename Scalar, typename Derived>
void check_dimension(const Functional<Scalar>& f, const Eigen::MatrixBase<Derived>& v) {
  if (f.family == Family::squared_distance && v.size() != f.b.size())
    throw ShapeError("squared_distance: argument length " + std::to_string(v.size()) +
                     " does not match data length " + std::to_string(f.b.size()));
  if (f.family == Family::group_l1 && v.size() % f.group_size != 0)
    throw ShapeError("group_l1: group size " + std::to_string(f.group_size) +
                     " does not divide length " + std::to_string(v.size()));
}

template <typename Scalar>
void check_step(Scalar step, const char* who) {
  if (!(step > Scalar(0))) throw std::invalid_argument(std::string(who) + ": step must be > 0");
}

}  // namespace detail

/// argmin_w ||v - w||^2 / 2 + tau * f(w), for the families with a closed form.
template <typename Scalar, typename Derived>
VectorX<Scalar> prox_primal(const Functional<Scalar>& f, Scalar tau,
                            const Eigen::MatrixBase<Derived>& v) {
  detail::check_step(tau, "prox_primal");
  detail::check_dimension(f, v);
  switch (f.family) {
    case Family::zero: return v;
    case Family::squared_norm: return v / (Scalar(1) + Scalar(2) * tau * f.alpha);
    default:
      throw UnsupportedProx("prox_primal: no closed form for " + to_string(f.family) +
                            "; dualize the term as an extra block");
  }
}

/// prox of sigma * f^*, the conjugate of f.
///
/// squared_distance: f^*(z) = ||z||^2/4 + <b, z>, giving (v - sigma b)/(1 + sigma/2).
/// group_l1: f^* is the indicator of the product of radius-alpha balls, so the
/// prox projects each group.
template <typename Scalar, typename Derived>
VectorX<Scalar> prox_dual(const Functional<Scalar>& f, Scalar sigma,
                          const Eigen::MatrixBase<Derived>& v) {
  detail::check_step(sigma, "prox_dual");
  detail::check_dimension(f, v);
  switch (f.family) {
    case Family::squared_distance: return (v - sigma * f.b) / (Scalar(1) + sigma / Scalar(2));
    case Family::group_l1: {
      VectorX<Scalar> out = v;
      for (Index start = 0; start < out.size(); start += f.group_size) {
        auto group = out.segment(start, f.group_size);
        const Scalar n = group.norm();
        if (n > f.alpha) group *= f.alpha / n;
      }
      return out;
    }
    default:
      throw UnsupportedProx("prox_dual: conjugate prox not provided for " + to_string(f.family));
  }
}

template <typename Scalar, typename Derived>
Scalar value(const Functional<Scalar>& f, const Eigen::MatrixBase<Derived>& v) {
  detail::check_dimension(f, v);
  switch (f.family) {
    case Family::zero: return Scalar(0);
    case Family::squared_distance: return (v - f.b).squaredNorm();
    case Family::squared_norm: return f.alpha * v.squaredNorm();
    case Family::group_l1: {
      Scalar total(0);
      for (Index start = 0; start < v.size(); start += f.group_size)
        total += v.segment(start, f.group_size).norm();
      return f.alpha * total;
    }
  }
  return std::numeric_limits<Scalar>::quiet_NaN();
}

template <typename Scalar, typename Derived>
Scalar conjugate_value(const Functional<Scalar>& f, const Eigen::MatrixBase<Derived>& z) {
  detail::check_dimension(f, z);
  constexpr Scalar inf = std::numeric_limits<Scalar>::infinity();
  const Scalar tol(kDomainTolerance);
  switch (f.family) {
    case Family::zero: return z.size() == 0 || z.cwiseAbs().maxCoeff() <= tol ? Scalar(0) : inf;
    case Family::squared_distance: return z.squaredNorm() / Scalar(4) + f.b.dot(z);
    case Family::squared_norm:
      if (f.alpha > Scalar(0)) return z.squaredNorm() / (Scalar(4) * f.alpha);
      return z.size() == 0 || z.cwiseAbs().maxCoeff() <= tol ? Scalar(0) : inf;
    case Family::group_l1:
      for (Index start = 0; start < z.size(); start += f.group_size)
        if (z.segment(start, f.group_size).norm() > f.alpha * (Scalar(1) + tol)) return inf;
      return Scalar(0);
  }
  return std::numeric_limits<Scalar>::quiet_NaN();
}

// ComplexImage conveniences: the real view is the argument.

template <typename Scalar>
BasicImage<Scalar> prox_primal(const Functional<Scalar>& f, Scalar tau, const BasicImage<Scalar>& v) {
  return BasicImage<Scalar>::from_real(v.shape, prox_primal(f, tau, v.real()));
}

template <typename Scalar>
BasicImage<Scalar> prox_dual(const Functional<Scalar>& f, Scalar sigma, const BasicImage<Scalar>& v) {
  return BasicImage<Scalar>::from_real(v.shape, prox_dual(f, sigma, v.real()));
}

template <typename Scalar>
Scalar value(const Functional<Scalar>& f, const BasicImage<Scalar>& v) {
  return value(f, v.real());
}

template <typename Scalar>
Scalar conjugate_value(const Functional<Scalar>& f, const BasicImage<Scalar>& z) {
  return conjugate_value(f, z.real());
}

inline std::string to_string(Family family) {
  switch (family) {
    case Family::zero: return "zero";
    case Family::squared_distance: return "squared_distance";
    case Family::squared_norm: return "squared_norm";
    case Family::group_l1: return "group_l1";
  }
  return "unknown";
}

using FunctionalDescriptor = Functional<double>;

}  // namespace spdhg
