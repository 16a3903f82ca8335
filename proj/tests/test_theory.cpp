#include <cmath>

#include "doctest.h"
#include "spdhg/mri.hpp"
#include "spdhg/oracle.hpp"
#include "spdhg/theory.hpp"
#include "test_support.hpp"

using namespace spdhg;

namespace {

struct Fixture {
  SaddleProblem problem;
  PrimalDual saddle;
  StepSizes steps;
};

Fixture quadratic_fixture(std::uint64_t seed, double gamma = 1.0) {
  mri::MriConfig c;
  c.rows = c.cols = 8;
  c.n_coils = 3;
  c.alpha = 1e-2;
  c.seed = seed;
  Fixture f{mri::assemble_problem(c).problem, {}, {}};
  f.saddle = solve_quadratic(f.problem);
  f.steps = compute_step_sizes(f.problem, gamma, Algorithm::spdhg);
  return f;
}

std::vector<ComplexImage> random_duals(const SaddleProblem& p, Rng& rng, double scale = 1.0) {
  std::vector<ComplexImage> y;
  for (const auto& b : p.blocks) y.push_back(random_image(b.op.codomain(), rng, scale));
  return y;
}

SolverState state_at(const SaddleProblem& p, const PrimalDual& w) {
  SolverState st = initial_state(p, 0);
  st.x = w.x;
  st.y = w.y;
  st.y_prev = w.y;
  st.z = stacked_adjoint(p, w.y);
  st.zbar = st.z;
  return st;
}

}  // namespace

TEST_CASE("V and V^k basic values") {
  Fixture f = quadratic_fixture(1);
  const auto& p = f.problem;
  const TheoryWeights w = TheoryWeights::from(p, f.steps);
  Rng rng(30);
  const ComplexImage zero_x(p.domain());
  std::vector<ComplexImage> zero_y;
  for (const auto& b : p.blocks) zero_y.emplace_back(b.op.codomain());
  CHECK(v_value(p, w, zero_x, zero_y) == 0.0);

  const ComplexImage x = random_image(p.domain(), rng);
  CHECK(v_value(p, w, x, zero_y) == doctest::Approx(squared_norm(x) / f.steps.tau));

  // at k = 0 the history term vanishes
  const SolverState st = initial_state(p, 0);
  const auto y = random_duals(p, rng);
  CHECK(vk_value(p, w, st, PrimalDual{x, y}) ==
        doctest::Approx(w.primal_norm2(x) + w.dual_norm2(y)).epsilon(1e-12));

  CHECK(lyapunov_delta(p, w, state_at(p, f.saddle), f.saddle) == 0.0);
}

TEST_CASE("V is bounded below by (1 - gamma_c) times the weighted norm") {
  Fixture f = quadratic_fixture(2);
  const auto& p = f.problem;
  const TheoryWeights w = TheoryWeights::from(p, f.steps);
  const double gc = contraction(p, f.steps);
  REQUIRE(gc < 1.0);
  Rng rng(31);
  for (int t = 0; t < 1000; ++t) {
    const ComplexImage x = random_image(p.domain(), rng, std::pow(10.0, t % 5 - 2));
    const auto y = random_duals(p, rng);
    const double lhs = v_value(p, w, x, y);
    const double rhs = (1.0 - gc) * (w.primal_norm2(x) + w.dual_norm2(y));
    CHECK(lhs >= rhs - 1e-10 * std::max(1.0, std::abs(lhs)));
  }
}

TEST_CASE("Delta^k dominates the weighted distance along a run") {
  Fixture f = quadratic_fixture(3);
  const auto& p = f.problem;
  const TheoryWeights w = TheoryWeights::from(p, f.steps);
  const double gc = contraction(p, f.steps);
  SolverState st = initial_state(p, 4);
  for (int k = 0; k < 100; ++k) {
    spdhg_step(p, st, f.steps);
    std::vector<ComplexImage> dy, ey;
    for (std::size_t i = 0; i < p.size(); ++i) {
      dy.push_back(st.y[i] - st.y_prev[i]);
      ey.push_back(st.y[i] - f.saddle.y[i]);
    }
    const double delta = lyapunov_delta(p, w, st, f.saddle);
    const double bound = (1 - gc) * w.primal_norm2(st.x - f.saddle.x) + (1 - gc) * w.dual_norm2(dy) +
                         w.dual_norm2(ey);
    CHECK(delta >= bound - 1e-10 * std::max(1.0, delta));
  }
}

TEST_CASE("expected descent holds with exact branch enumeration") {
  for (std::uint64_t seed : {5u, 6u}) {
    Fixture f = quadratic_fixture(seed);
    SolverState st = initial_state(f.problem, seed);
    for (int k = 0; k < 100; ++k) {
      const DescentCheck d = expected_next_delta(f.problem, st, f.steps, f.saddle);
      CHECK(d.lhs >= d.rhs - 1e-8 * std::max(1.0, std::abs(d.lhs)));
      spdhg_step(f.problem, st, f.steps);
    }
  }
}

TEST_CASE("expected descent at the saddle is zero") {
  Fixture f = quadratic_fixture(7);
  const DescentCheck d = expected_next_delta(f.problem, state_at(f.problem, f.saddle), f.steps, f.saddle);
  CHECK(std::abs(d.lhs) < 1e-12);
  CHECK(std::abs(d.rhs) < 1e-12);
}

TEST_CASE("single block descent is the deterministic next step") {
  Rng rng(32);
  const SaddleProblem p = testing::random_quadratic_problem(Shape{3, 3, 1}, 1, 0.5, rng);
  const PrimalDual saddle = solve_quadratic(p);
  const StepSizes steps = compute_step_sizes(p, 1.0, Algorithm::spdhg);
  const TheoryWeights w = TheoryWeights::from(p, steps);
  SolverState st = initial_state(p, 0);
  for (int k = 0; k < 20; ++k) {
    const DescentCheck d = expected_next_delta(p, st, steps, saddle);
    SolverState next = st;
    spdhg_step(p, next, steps);
    CHECK(d.expected_next == doctest::Approx(lyapunov_delta(p, w, next, saddle)).epsilon(1e-12));
    CHECK(d.lhs >= d.rhs - 1e-8 * std::max(1.0, std::abs(d.lhs)));
    st = next;
  }
}

TEST_CASE("expected_next_delta rejects a non-saddle") {
  Fixture f = quadratic_fixture(8);
  PrimalDual wrong = f.saddle;
  wrong.x.data.array() += 0.1;
  CHECK_THROWS_AS(expected_next_delta(f.problem, initial_state(f.problem, 0), f.steps, wrong),
                  std::invalid_argument);
}

TEST_CASE("T_j fixes the saddle and moves other points") {
  Fixture f = quadratic_fixture(9);
  CHECK(fixed_point_residual(f.problem, f.steps, f.saddle) < 1e-8);
  Rng rng(33);
  PrimalDual random{random_image(f.problem.domain(), rng), random_duals(f.problem, rng)};
  CHECK(fixed_point_residual(f.problem, f.steps, random) > 1e-3);
  CHECK_THROWS(apply_T(f.problem, f.steps, f.problem.size(), f.saddle));
}

TEST_CASE("T_j of zero is zero on a zero-data instance") {
  Rng rng(34);
  const Shape s{4, 4, 1};
  auto op = testing::random_composition(s, rng);
  const SaddleProblem p = make_problem(
      {{op, FunctionalDescriptor::squared_distance(ComplexImage(op.codomain()))}}, FunctionalDescriptor::zero());
  const StepSizes steps = compute_step_sizes(p, 1.0, Algorithm::spdhg);
  const PrimalDual zero{ComplexImage(s), {ComplexImage(op.codomain())}};
  const PrimalDual out = apply_T(p, steps, 0, zero);
  CHECK(norm(out.x) == 0.0);
  CHECK(norm(out.y[0]) == 0.0);
}

TEST_CASE("T_{j^k} maps (x^{k+1}, y^k) to (x^{k+2}, y^{k+1})") {
  Fixture f = quadratic_fixture(10);
  const auto& p = f.problem;
  SolverState st = initial_state(p, 11);
  spdhg_step(p, st, f.steps);
  for (int k = 0; k < 200; ++k) {
    const PrimalDual before{st.x, st.y_prev};  // (x^{k+1}, y^k)
    const std::size_t j = *st.last_block;      // j^k
    const PrimalDual mapped = apply_T(p, f.steps, j, before);
    spdhg_step(p, st, f.steps);
    CHECK((mapped.x.data - st.x.data).norm() < 1e-10);
    // y^{k+1} is the iterate before this step
    std::vector<ComplexImage> y_k1 = st.y_prev;
    for (std::size_t i = 0; i < p.size(); ++i) CHECK((mapped.y[i].data - y_k1[i].data).norm() < 1e-10);
  }
}

TEST_CASE("Bregman gap is nonnegative and vanishes at the saddle") {
  Fixture f = quadratic_fixture(12);
  CHECK(std::abs(bregman_gap(f.problem, f.saddle.x, f.saddle.y, f.saddle)) < 1e-12);
  Rng rng(35);
  for (int t = 0; t < 100; ++t) {
    const ComplexImage x = random_image(f.problem.domain(), rng);
    const auto y = random_duals(f.problem, rng);
    CHECK(bregman_gap(f.problem, x, y, f.saddle) >= -1e-9);
  }
}

TEST_CASE("Bregman gap is infinite outside the conjugate domain") {
  mri::MriConfig c;
  c.rows = c.cols = 8;
  c.n_coils = 2;
  c.regularizer = mri::Regularizer::tv;
  c.alpha = 0.1;
  const SaddleProblem p = mri::assemble_problem(c).problem;
  PrimalDual w{ComplexImage(p.domain()), {}};
  for (const auto& b : p.blocks) w.y.emplace_back(b.op.codomain());
  auto y = w.y;
  y.back().data.array() += 10.0;
  CHECK(std::isinf(bregman_gap(p, w.x, y, w)));
}
