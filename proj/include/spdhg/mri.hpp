#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "spdhg/solvers.hpp"

namespace spdhg::mri {

enum class MaskKind { cartesian_lines, uniform_random };
enum class Regularizer { l2, tv };

std::string to_string(MaskKind kind);
std::string to_string(Regularizer reg);
MaskKind parse_mask_kind(const std::string& s);
Regularizer parse_regularizer(const std::string& s);

struct MriConfig {
  Index rows = 64;
  Index cols = 64;
  Index n_coils = 4;
  double sampling_factor = 2.0;
  MaskKind mask_kind = MaskKind::cartesian_lines;
  double noise_sigma = 0.05;
  Regularizer regularizer = Regularizer::l2;
  double alpha = 1e-4;
  std::uint64_t seed = 0;

  Shape shape() const { return {rows, cols, 1}; }
  /// floor(d / sampling_factor)
  Index samples() const;
  void validate() const;
};

/// Shepp-Logan style ellipse phantom, real valued in [0, 1], zero near the
/// border. Deterministic in the shape alone.
ComplexImage make_phantom(Shape shape);

/// Smooth coil maps: Gaussian bumps around the grid with random linear phase
/// ramps, scaled so that max_p sum_i |c_i(p)|^2 = 1.
std::vector<ComplexImage> make_coil_maps(Shape shape, Index n_coils, std::uint64_t seed);

/// Sorted flat k-space indices shared by all coils.
std::vector<Index> make_mask(Shape shape, double sampling_factor, MaskKind kind, std::uint64_t seed);

/// Physical (unshifted DFT) row of the centered k-space row `centered`.
Index physical_row(Index centered, Index rows);

/// b_i = A_i x + eta_i with i.i.d. Gaussian noise of std `noise_sigma` per
/// real component.
std::vector<ComplexImage> synthesize_data(const ComplexImage& truth,
                                          const std::vector<LinearOperator>& ops,
                                          double noise_sigma, std::uint64_t seed);

struct MriInstance {
  SaddleProblem problem;
  ComplexImage ground_truth;
  std::vector<ComplexImage> data;
  std::vector<ComplexImage> coils;
  std::vector<Index> mask;
  std::size_t coil_blocks = 0;
};

/// Coil blocks A_i = mask o dft2 o coil_multiply(c_i) with f_i = ||. - b_i||^2.
/// l2: g = alpha ||x||^2. tv: g = 0 and an extra block (gradient,
/// group_l1(alpha, 4)) is appended. Uniform sampling over all blocks.
MriInstance assemble_problem(const MriConfig& config);

}  // namespace spdhg::mri
