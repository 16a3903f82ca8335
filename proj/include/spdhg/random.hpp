#pragma once

#include <random>

#include "spdhg/image.hpp"

namespace spdhg {

/// The library-wide seedable generator.
using Rng = std::mt19937_64;

/// Uniform double in [0, 1) from the top 53 bits of one draw.
inline double uniform01(Rng& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

/// Complex image with i.i.d. standard normal real and imaginary parts.
inline ComplexImage random_image(Shape shape, Rng& rng, double stddev = 1.0) {
  std::normal_distribution<double> normal(0.0, stddev);
  ComplexImage out(shape);
  auto re = out.real();
  for (Index i = 0; i < re.size(); ++i) re[i] = normal(rng);
  return out;
}

}  // namespace spdhg
