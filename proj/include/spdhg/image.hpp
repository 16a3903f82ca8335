#pragma once

#include <complex>
#include <cstddef>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace spdhg {

using Index = Eigen::Index;

template <typename Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

/// Grid shape of a complex array. `channels` is the number of values stored
/// per grid cell (2 for the gradient codomain, 1 otherwise).
struct Shape {
  Index rows = 0;
  Index cols = 0;
  Index channels = 1;

  Index size() const { return rows * cols * channels; }
  bool operator==(const Shape&) const = default;
};

inline std::string to_string(const Shape& s) {
  std::string out = std::to_string(s.rows) + "x" + std::to_string(s.cols);
  if (s.channels != 1) out += "x" + std::to_string(s.channels);
  return out;
}

class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Complex array on a grid, laid out row-major with channels innermost:
/// index = (r * cols + c) * channels + ch.
///
/// The real view interleaves real and imaginary parts, which is how C^d is
/// identified with R^{2d}; every inner product in the library is the real one.
template <typename Scalar>
struct BasicImage {
  using Complex = std::complex<Scalar>;
  using ComplexVector = VectorX<Complex>;
  using RealMap = Eigen::Map<VectorX<Scalar>>;
  using ConstRealMap = Eigen::Map<const VectorX<Scalar>>;

  Shape shape;
  ComplexVector data;

  BasicImage() = default;
  explicit BasicImage(Shape s) : shape(s), data(ComplexVector::Zero(s.size())) {}
  BasicImage(Shape s, ComplexVector values) : shape(s), data(std::move(values)) {
    if (data.size() != shape.size())
      throw ShapeError("image data length " + std::to_string(data.size()) +
                       " does not match shape " + to_string(shape));
  }

  static BasicImage zeros(Shape s) { return BasicImage(s); }

  static BasicImage from_real(Shape s, const VectorX<Scalar>& real) {
    if (real.size() != 2 * s.size())
      throw ShapeError("real view length mismatch for shape " + to_string(s));
    BasicImage out(s);
    out.real() = real;
    return out;
  }

  Index size() const { return data.size(); }

  RealMap real() { return RealMap(reinterpret_cast<Scalar*>(data.data()), 2 * data.size()); }
  ConstRealMap real() const {
    return ConstRealMap(reinterpret_cast<const Scalar*>(data.data()), 2 * data.size());
  }

  Complex& operator()(Index r, Index c, Index ch = 0) {
    return data[(r * shape.cols + c) * shape.channels + ch];
  }
  const Complex& operator()(Index r, Index c, Index ch = 0) const {
    return data[(r * shape.cols + c) * shape.channels + ch];
  }

  BasicImage& operator+=(const BasicImage& o) {
    data += o.data;
    return *this;
  }
  BasicImage& operator-=(const BasicImage& o) {
    data -= o.data;
    return *this;
  }
  BasicImage& operator*=(Scalar s) {
    data *= s;
    return *this;
  }
  friend BasicImage operator+(BasicImage a, const BasicImage& b) { return a += b; }
  friend BasicImage operator-(BasicImage a, const BasicImage& b) { return a -= b; }
  friend BasicImage operator*(Scalar s, BasicImage a) { return a *= s; }
};

using ComplexImage = BasicImage<double>;
using Complex = std::complex<double>;

/// Re(sum u_k conj(v_k)), the real inner product of the R^{2d} view.
template <typename Scalar>
Scalar inner(const BasicImage<Scalar>& u, const BasicImage<Scalar>& v) {
  return u.real().dot(v.real());
}

template <typename Scalar>
Scalar squared_norm(const BasicImage<Scalar>& u) {
  return u.real().squaredNorm();
}

template <typename Scalar>
Scalar norm(const BasicImage<Scalar>& u) {
  return u.real().norm();
}

}  // namespace spdhg
