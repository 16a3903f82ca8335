#include "spdhg/mri.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <numeric>
#include <stdexcept>

namespace spdhg::mri {

std::string to_string(MaskKind kind) {
  return kind == MaskKind::cartesian_lines ? "cartesian_lines" : "uniform_random";
}

std::string to_string(Regularizer reg) { return reg == Regularizer::l2 ? "l2" : "tv"; }

MaskKind parse_mask_kind(const std::string& s) {
  if (s == "cartesian_lines") return MaskKind::cartesian_lines;
  if (s == "uniform_random") return MaskKind::uniform_random;
  throw std::invalid_argument("unknown mask kind '" + s + "'");
}

Regularizer parse_regularizer(const std::string& s) {
  if (s == "l2") return Regularizer::l2;
  if (s == "tv") return Regularizer::tv;
  throw std::invalid_argument("unknown regularizer '" + s + "'");
}

Index MriConfig::samples() const {
  return static_cast<Index>(std::floor(static_cast<double>(rows * cols) / sampling_factor));
}

void MriConfig::validate() const {
  if (rows < 8 || cols < 8) throw std::invalid_argument("grid must be at least 8x8");
  if (n_coils < 1) throw std::invalid_argument("n_coils must be >= 1");
  if (!(sampling_factor >= 1.0)) throw std::invalid_argument("sampling_factor must be >= 1");
  if (samples() < 1) throw std::invalid_argument("sampling_factor leaves no samples");
  if (!(noise_sigma >= 0.0)) throw std::invalid_argument("noise_sigma must be >= 0");
  if (!(alpha >= 0.0)) throw std::invalid_argument("alpha must be >= 0");
}

namespace {

struct Ellipse {
  double intensity, a, b, x0, y0, phi_deg;
};

// Modified Shepp-Logan, shrunk by 0.85 so the head stays off the border.
constexpr std::array<Ellipse, 10> kEllipses{{
    {1.0, 0.69, 0.92, 0.0, 0.0, 0.0},
    {-0.8, 0.6624, 0.874, 0.0, -0.0184, 0.0},
    {-0.2, 0.11, 0.31, 0.22, 0.0, -18.0},
    {-0.2, 0.16, 0.41, -0.22, 0.0, 18.0},
    {0.1, 0.21, 0.25, 0.0, 0.35, 0.0},
    {0.1, 0.046, 0.046, 0.0, 0.1, 0.0},
    {0.1, 0.046, 0.046, 0.0, -0.1, 0.0},
    {0.1, 0.046, 0.023, -0.08, -0.605, 0.0},
    {0.1, 0.023, 0.023, 0.0, -0.606, 0.0},
    {0.1, 0.023, 0.046, 0.06, -0.605, 0.0},
}};
constexpr double kShrink = 0.85;

}  // namespace

ComplexImage make_phantom(Shape shape) {
  if (shape.rows < 8 || shape.cols < 8)
    throw std::invalid_argument("make_phantom: shape must be at least 8x8, got " + to_string(shape));
  ComplexImage img(Shape{shape.rows, shape.cols, 1});
  for (Index r = 0; r < shape.rows; ++r) {
    // pixel centres in [-1, 1], y pointing up
    const double y = 1.0 - (2.0 * r + 1.0) / static_cast<double>(shape.rows);
    for (Index c = 0; c < shape.cols; ++c) {
      const double x = (2.0 * c + 1.0) / static_cast<double>(shape.cols) - 1.0;
      double v = 0.0;
      for (const auto& e : kEllipses) {
        const double phi = e.phi_deg * std::numbers::pi / 180.0;
        const double dx = x / kShrink - e.x0, dy = y / kShrink - e.y0;
        const double u = dx * std::cos(phi) + dy * std::sin(phi);
        const double w = -dx * std::sin(phi) + dy * std::cos(phi);
        if ((u * u) / (e.a * e.a) + (w * w) / (e.b * e.b) <= 1.0) v += e.intensity;
      }
      img(r, c) = std::clamp(v, 0.0, 1.0);
    }
  }
  return img;
}

std::vector<ComplexImage> make_coil_maps(Shape shape, Index n_coils, std::uint64_t seed) {
  if (n_coils < 1) throw std::invalid_argument("make_coil_maps: n_coils must be >= 1");
  Rng rng(seed);
  const Shape s{shape.rows, shape.cols, 1};
  const double radius = 0.7, width = 0.6;
  std::vector<ComplexImage> maps;
  for (Index i = 0; i < n_coils; ++i) {
    const double angle = 2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(n_coils);
    const double cx = n_coils == 1 ? 0.0 : radius * std::cos(angle);
    const double cy = n_coils == 1 ? 0.0 : radius * std::sin(angle);
    const double kx = std::numbers::pi * (2.0 * uniform01(rng) - 1.0);
    const double ky = std::numbers::pi * (2.0 * uniform01(rng) - 1.0);
    const double phase0 = 2.0 * std::numbers::pi * uniform01(rng);
    ComplexImage map(s);
    for (Index r = 0; r < s.rows; ++r) {
      const double y = 1.0 - (2.0 * r + 1.0) / static_cast<double>(s.rows);
      for (Index c = 0; c < s.cols; ++c) {
        const double x = (2.0 * c + 1.0) / static_cast<double>(s.cols) - 1.0;
        const double d2 = (x - cx) * (x - cx) + (y - cy) * (y - cy);
        const double magnitude = std::exp(-d2 / (2.0 * width * width));
        map(r, c) = std::polar(magnitude, phase0 + kx * x + ky * y);
      }
    }
    maps.push_back(std::move(map));
  }

  Eigen::VectorXd power = Eigen::VectorXd::Zero(s.size());
  for (const auto& m : maps) power += m.data.cwiseAbs2();
  const double scale = 1.0 / std::sqrt(power.maxCoeff());
  for (auto& m : maps) m.data *= scale;
  return maps;
}

Index physical_row(Index centered, Index rows) { return ((centered - rows / 2) % rows + rows) % rows; }

std::vector<Index> make_mask(Shape shape, double sampling_factor, MaskKind kind, std::uint64_t seed) {
  if (!(sampling_factor >= 1.0)) throw std::invalid_argument("make_mask: sampling_factor must be >= 1");
  const Index rows = shape.rows, cols = shape.cols, d = rows * cols;
  const Index m = static_cast<Index>(std::floor(static_cast<double>(d) / sampling_factor));
  if (m < 1) throw std::invalid_argument("make_mask: no samples left (m < 1)");
  Rng rng(seed);

  std::vector<Index> indices;
  if (kind == MaskKind::uniform_random) {
    std::vector<Index> all(d);
    std::iota(all.begin(), all.end(), Index{0});
    for (Index i = 0; i < m; ++i) {
      const Index j = i + static_cast<Index>(uniform01(rng) * static_cast<double>(d - i));
      std::swap(all[i], all[j]);
    }
    indices.assign(all.begin(), all.begin() + m);
  } else {
    const Index n_rows = std::max<Index>(1, m / cols);
    const Index band = std::min<Index>(
        n_rows, static_cast<Index>(std::ceil(0.08 * static_cast<double>(rows))));
    std::vector<bool> chosen(rows, false);
    const Index first = rows / 2 - band / 2;
    for (Index c = first; c < first + band; ++c) chosen[physical_row(c, rows)] = true;

    std::vector<Index> rest;
    for (Index r = 0; r < rows; ++r)
      if (!chosen[r]) rest.push_back(r);
    for (Index i = 0; i < n_rows - band; ++i) {
      const Index j =
          i + static_cast<Index>(uniform01(rng) * static_cast<double>(rest.size() - i));
      std::swap(rest[i], rest[j]);
      chosen[rest[i]] = true;
    }
    for (Index r = 0; r < rows; ++r)
      if (chosen[r])
        for (Index c = 0; c < cols; ++c) indices.push_back(r * cols + c);
  }
  std::sort(indices.begin(), indices.end());
  return indices;
}

std::vector<ComplexImage> synthesize_data(const ComplexImage& truth,
                                          const std::vector<LinearOperator>& ops,
                                          double noise_sigma, std::uint64_t seed) {
  Rng rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<ComplexImage> data;
  for (const auto& op : ops) {
    ComplexImage b = op.apply(truth);
    if (noise_sigma > 0.0) {
      auto re = b.real();
      for (Index k = 0; k < re.size(); ++k) re[k] += noise_sigma * normal(rng);
    }
    data.push_back(std::move(b));
  }
  return data;
}

MriInstance assemble_problem(const MriConfig& config) {
  config.validate();
  const Shape shape = config.shape();

  // independent streams for each random ingredient
  MriInstance inst;
  inst.ground_truth = make_phantom(shape);
  inst.coils = make_coil_maps(shape, config.n_coils, config.seed * 4 + 1);
  inst.mask = make_mask(shape, config.sampling_factor, config.mask_kind, config.seed * 4 + 2);

  const LinearOperator sample = mask(shape, inst.mask);
  const LinearOperator fourier = dft2(shape);
  std::vector<LinearOperator> ops;
  for (const auto& c : inst.coils) ops.push_back(compose({sample, fourier, coil_multiply(c)}));
  inst.data = synthesize_data(inst.ground_truth, ops, config.noise_sigma, config.seed * 4 + 3);

  std::vector<Block> blocks;
  for (std::size_t i = 0; i < ops.size(); ++i)
    blocks.push_back({ops[i], FunctionalDescriptor::squared_distance(inst.data[i])});
  inst.coil_blocks = blocks.size();

  FunctionalDescriptor g;
  if (config.regularizer == Regularizer::l2) {
    g = FunctionalDescriptor::squared_norm(config.alpha);
  } else {
    g = FunctionalDescriptor::zero();
    blocks.push_back({gradient(shape), FunctionalDescriptor::group_l1(config.alpha, 4)});
  }
  inst.problem = make_problem(std::move(blocks), std::move(g));
  return inst;
}

}  // namespace spdhg::mri
