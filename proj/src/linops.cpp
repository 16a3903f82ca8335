#include "spdhg/linops.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <numeric>

#include <unsupported/Eigen/FFT>

#include "spdhg/random.hpp"

namespace spdhg {

std::string to_string(OperatorKind kind) {
  switch (kind) {
    case OperatorKind::dft2: return "dft2";
    case OperatorKind::mask: return "mask";
    case OperatorKind::coil_multiply: return "coil_multiply";
    case OperatorKind::gradient: return "gradient";
    case OperatorKind::scaled_identity: return "scaled_identity";
    case OperatorKind::compose: return "compose";
    case OperatorKind::block_row: return "block_row";
  }
  return "unknown";
}

class LinearOperator::Node {
 public:
  Node(OperatorKind kind, Shape domain, Shape codomain)
      : kind_(kind), domain_(domain), codomain_(codomain) {}
  virtual ~Node() = default;

  virtual void forward(const ComplexImage& x, ComplexImage& out) const = 0;
  virtual void backward(const ComplexImage& y, ComplexImage& out) const = 0;
  virtual std::string describe() const { return to_string(kind_) + "[" + to_string(domain_) + "]"; }
  virtual const std::vector<LinearOperator>& children() const {
    static const std::vector<LinearOperator> none;
    return none;
  }

  OperatorKind kind_;
  Shape domain_;
  Shape codomain_;
  mutable std::atomic<double> norm_bound_{-1.0};
};

namespace {

using Node = LinearOperator::Node;

void check_shape(const ComplexImage& x, const Shape& expected, const Node& node, const char* what) {
  if (x.shape != expected || x.data.size() != expected.size())
    throw ShapeError(node.describe() + ": " + what + " has shape " + to_string(x.shape) +
                     ", expected " + to_string(expected));
}

class Dft2 final : public Node {
 public:
  explicit Dft2(Shape s) : Node(OperatorKind::dft2, s, s) {}

  void forward(const ComplexImage& x, ComplexImage& out) const override { transform(x, out, false); }
  void backward(const ComplexImage& y, ComplexImage& out) const override { transform(y, out, true); }

 private:
  void transform(const ComplexImage& in, ComplexImage& out, bool inverse) const {
    thread_local Eigen::FFT<double> fft;
    fft.SetFlag(Eigen::FFT<double>::Unscaled);
    const Index rows = domain_.rows, cols = domain_.cols, ch = domain_.channels;
    out = ComplexImage(codomain_);
    std::vector<Complex> src, dst;

    // rows pass, per channel
    src.resize(cols);
    dst.resize(cols);
    ComplexImage tmp(domain_);
    for (Index c0 = 0; c0 < ch; ++c0)
      for (Index r = 0; r < rows; ++r) {
        for (Index c = 0; c < cols; ++c) src[c] = in(r, c, c0);
        run(fft, dst, src, inverse);
        for (Index c = 0; c < cols; ++c) tmp(r, c, c0) = dst[c];
      }
    src.resize(rows);
    dst.resize(rows);
    for (Index c0 = 0; c0 < ch; ++c0)
      for (Index c = 0; c < cols; ++c) {
        for (Index r = 0; r < rows; ++r) src[r] = tmp(r, c, c0);
        run(fft, dst, src, inverse);
        for (Index r = 0; r < rows; ++r) out(r, c, c0) = dst[r];
      }
    out.data *= 1.0 / std::sqrt(static_cast<double>(rows * cols));
  }

  static void run(Eigen::FFT<double>& fft, std::vector<Complex>& dst, const std::vector<Complex>& src,
                  bool inverse) {
    if (src.size() == 1) {
      dst[0] = src[0];
      return;
    }
    if (inverse)
      fft.inv(dst.data(), src.data(), static_cast<Index>(src.size()));
    else
      fft.fwd(dst.data(), src.data(), static_cast<Index>(src.size()));
  }
};

class Mask final : public Node {
 public:
  Mask(Shape domain, std::vector<Index> idx)
      : Node(OperatorKind::mask, domain, Shape{1, static_cast<Index>(idx.size()), 1}),
        indices_(std::move(idx)) {}

  void forward(const ComplexImage& x, ComplexImage& out) const override {
    out = ComplexImage(codomain_);
    for (std::size_t k = 0; k < indices_.size(); ++k) out.data[k] = x.data[indices_[k]];
  }
  void backward(const ComplexImage& y, ComplexImage& out) const override {
    out = ComplexImage(domain_);
    for (std::size_t k = 0; k < indices_.size(); ++k) out.data[indices_[k]] += y.data[k];
  }

 private:
  std::vector<Index> indices_;
};

class CoilMultiply final : public Node {
 public:
  explicit CoilMultiply(ComplexImage map)
      : Node(OperatorKind::coil_multiply, map.shape, map.shape), map_(std::move(map)) {}

  void forward(const ComplexImage& x, ComplexImage& out) const override {
    out = ComplexImage(codomain_, map_.data.cwiseProduct(x.data));
  }
  void backward(const ComplexImage& y, ComplexImage& out) const override {
    out = ComplexImage(domain_, map_.data.conjugate().cwiseProduct(y.data));
  }

 private:
  ComplexImage map_;
};

class Gradient final : public Node {
 public:
  explicit Gradient(Shape s) : Node(OperatorKind::gradient, s, Shape{s.rows, s.cols, 2}) {}

  void forward(const ComplexImage& x, ComplexImage& out) const override {
    const Index rows = domain_.rows, cols = domain_.cols;
    out = ComplexImage(codomain_);
    for (Index r = 0; r < rows; ++r)
      for (Index c = 0; c < cols; ++c) {
        if (r + 1 < rows) out(r, c, 0) = x(r + 1, c) - x(r, c);
        if (c + 1 < cols) out(r, c, 1) = x(r, c + 1) - x(r, c);
      }
  }
  // negative divergence
  void backward(const ComplexImage& y, ComplexImage& out) const override {
    const Index rows = domain_.rows, cols = domain_.cols;
    out = ComplexImage(domain_);
    for (Index r = 0; r < rows; ++r)
      for (Index c = 0; c < cols; ++c) {
        if (r + 1 < rows) {
          out(r, c) -= y(r, c, 0);
          out(r + 1, c) += y(r, c, 0);
        }
        if (c + 1 < cols) {
          out(r, c) -= y(r, c, 1);
          out(r, c + 1) += y(r, c, 1);
        }
      }
  }
};

class ScaledIdentity final : public Node {
 public:
  ScaledIdentity(Shape s, double scale) : Node(OperatorKind::scaled_identity, s, s), scale_(scale) {}

  void forward(const ComplexImage& x, ComplexImage& out) const override {
    out = ComplexImage(codomain_, scale_ * x.data);
  }
  void backward(const ComplexImage& y, ComplexImage& out) const override {
    out = ComplexImage(domain_, scale_ * y.data);
  }

 private:
  double scale_;
};

class Compose final : public Node {
 public:
  explicit Compose(std::vector<LinearOperator> chain)
      : Node(OperatorKind::compose, chain.back().domain(), chain.front().codomain()),
        chain_(std::move(chain)) {}

  void forward(const ComplexImage& x, ComplexImage& out) const override {
    out = x;
    for (auto it = chain_.rbegin(); it != chain_.rend(); ++it) out = it->apply(out);
  }
  void backward(const ComplexImage& y, ComplexImage& out) const override {
    out = y;
    for (const auto& op : chain_) out = op.adjoint(out);
  }
  std::string describe() const override {
    std::string s = "compose(";
    for (std::size_t i = 0; i < chain_.size(); ++i) s += (i ? ", " : "") + chain_[i].describe();
    return s + ")";
  }
  const std::vector<LinearOperator>& children() const override { return chain_; }

 private:
  std::vector<LinearOperator> chain_;
};

Shape stacked_shape(const std::vector<LinearOperator>& blocks) {
  Index total = 0;
  for (const auto& b : blocks) total += b.codomain().size();
  return Shape{1, total, 1};
}

class BlockRow final : public Node {
 public:
  explicit BlockRow(std::vector<LinearOperator> blocks)
      : Node(OperatorKind::block_row, blocks.front().domain(), stacked_shape(blocks)),
        blocks_(std::move(blocks)) {}

  void forward(const ComplexImage& x, ComplexImage& out) const override {
    out = ComplexImage(codomain_);
    Index offset = 0;
    for (const auto& b : blocks_) {
      const ComplexImage part = b.apply(x);
      out.data.segment(offset, part.size()) = part.data;
      offset += part.size();
    }
  }
  void backward(const ComplexImage& y, ComplexImage& out) const override {
    out = ComplexImage(domain_);
    Index offset = 0;
    for (const auto& b : blocks_) {
      const Shape cs = b.codomain();
      ComplexImage part(cs, y.data.segment(offset, cs.size()));
      out += b.adjoint(part);
      offset += cs.size();
    }
  }
  std::string describe() const override {
    return "block_row(" + std::to_string(blocks_.size()) + " blocks)";
  }
  const std::vector<LinearOperator>& children() const override { return blocks_; }

 private:
  std::vector<LinearOperator> blocks_;
};

void require_valid(Shape s, const char* who) {
  if (s.rows < 1 || s.cols < 1 || s.channels < 1)
    throw ShapeError(std::string(who) + ": invalid shape " + to_string(s));
}

}  // namespace

OperatorKind LinearOperator::kind() const { return node_->kind_; }
const Shape& LinearOperator::domain() const { return node_->domain_; }
const Shape& LinearOperator::codomain() const { return node_->codomain_; }
std::string LinearOperator::describe() const { return node_->describe(); }
const std::vector<LinearOperator>& LinearOperator::children() const { return node_->children(); }

ComplexImage LinearOperator::apply(const ComplexImage& x) const {
  check_shape(x, node_->domain_, *node_, "apply input");
  ComplexImage out;
  node_->forward(x, out);
  return out;
}

ComplexImage LinearOperator::adjoint(const ComplexImage& y) const {
  check_shape(y, node_->codomain_, *node_, "adjoint input");
  ComplexImage out;
  node_->backward(y, out);
  return out;
}

std::optional<double> LinearOperator::norm_bound() const {
  const double v = node_->norm_bound_.load(std::memory_order_acquire);
  if (v < 0.0) return std::nullopt;
  return v;
}

void LinearOperator::cache_norm_bound(double bound) const {
  node_->norm_bound_.store(bound, std::memory_order_release);
}

std::vector<Index> LinearOperator::block_offsets() const {
  std::vector<Index> offsets{0};
  for (const auto& b : children()) offsets.push_back(offsets.back() + b.codomain().size());
  return offsets;
}

LinearOperator dft2(Shape shape) {
  require_valid(shape, "dft2");
  return LinearOperator(std::make_shared<Dft2>(shape));
}

LinearOperator mask(Shape domain, std::vector<Index> indices) {
  require_valid(domain, "mask");
  if (indices.empty()) throw ShapeError("mask: empty index set");
  for (Index i : indices)
    if (i < 0 || i >= domain.size())
      throw ShapeError("mask: index " + std::to_string(i) + " out of bounds for shape " +
                       to_string(domain));
  return LinearOperator(std::make_shared<Mask>(domain, std::move(indices)));
}

LinearOperator coil_multiply(ComplexImage map) {
  require_valid(map.shape, "coil_multiply");
  if (map.data.size() != map.shape.size()) throw ShapeError("coil_multiply: map data length mismatch");
  return LinearOperator(std::make_shared<CoilMultiply>(std::move(map)));
}

LinearOperator gradient(Shape shape) {
  require_valid(shape, "gradient");
  if (shape.channels != 1) throw ShapeError("gradient: domain must have a single channel");
  return LinearOperator(std::make_shared<Gradient>(shape));
}

LinearOperator scaled_identity(Shape shape, double scale) {
  require_valid(shape, "scaled_identity");
  return LinearOperator(std::make_shared<ScaledIdentity>(shape, scale));
}

LinearOperator compose(std::vector<LinearOperator> chain) {
  if (chain.empty()) throw ShapeError("compose: empty chain");
  for (std::size_t i = 0; i + 1 < chain.size(); ++i)
    if (chain[i].domain() != chain[i + 1].codomain())
      throw ShapeError("compose: stage " + std::to_string(i) + " (" + chain[i].describe() +
                       ") expects input " + to_string(chain[i].domain()) + " but stage " +
                       std::to_string(i + 1) + " (" + chain[i + 1].describe() + ") produces " +
                       to_string(chain[i + 1].codomain()));
  return LinearOperator(std::make_shared<Compose>(std::move(chain)));
}

LinearOperator block_row(std::vector<LinearOperator> blocks) {
  if (blocks.empty()) throw ShapeError("block_row: no blocks");
  for (std::size_t i = 1; i < blocks.size(); ++i)
    if (blocks[i].domain() != blocks[0].domain())
      throw ShapeError("block_row: block " + std::to_string(i) + " (" + blocks[i].describe() +
                       ") has domain " + to_string(blocks[i].domain()) + ", expected " +
                       to_string(blocks[0].domain()));
  return LinearOperator(std::make_shared<BlockRow>(std::move(blocks)));
}

LinearOperator build(const OperatorDescription& d) {
  switch (d.kind) {
    case OperatorKind::dft2: return dft2(d.shape);
    case OperatorKind::mask: return mask(d.shape, d.indices);
    case OperatorKind::coil_multiply: return coil_multiply(d.coil);
    case OperatorKind::gradient: return gradient(d.shape);
    case OperatorKind::scaled_identity: return scaled_identity(d.shape, d.scale);
    case OperatorKind::compose:
    case OperatorKind::block_row: {
      std::vector<LinearOperator> children;
      children.reserve(d.children.size());
      for (const auto& c : d.children) children.push_back(build(c));
      return d.kind == OperatorKind::compose ? compose(std::move(children))
                                             : block_row(std::move(children));
    }
  }
  throw ShapeError("build: unknown operator kind");
}

NormEstimate estimate_norm(const LinearOperator& op, int max_iters, double tol,
                           unsigned long long seed) {
  if (max_iters < 1) throw std::invalid_argument("estimate_norm: max_iters must be >= 1");
  if (!(tol > 0.0)) throw std::invalid_argument("estimate_norm: tol must be > 0");

  Rng rng(seed);
  ComplexImage v = random_image(op.domain(), rng);
  v *= 1.0 / norm(v);

  NormEstimate result;
  double previous = -1.0;
  for (int it = 1; it <= max_iters; ++it) {
    ComplexImage w = op.adjoint(op.apply(v));
    const double rayleigh = inner(v, w);
    const double wnorm = norm(w);
    result.iterations = it;
    if (wnorm == 0.0) {
      result.value = 0.0;
      result.converged = true;
      break;
    }
    result.value = std::sqrt(std::max(rayleigh, 0.0));
    if (previous >= 0.0 && std::abs(result.value - previous) < tol * result.value) {
      result.converged = true;
      break;
    }
    previous = result.value;
    v = std::move(w);
    v *= 1.0 / wnorm;
  }
  op.cache_norm_bound(result.value * kNormSafetyFactor);
  return result;
}

double norm_bound(const LinearOperator& op) {
  if (auto b = op.norm_bound()) return *b;
  estimate_norm(op);
  return *op.norm_bound();
}

}  // namespace spdhg
