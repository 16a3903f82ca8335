#include <cmath>

#include "doctest.h"
#include "spdhg/mri.hpp"
#include "spdhg/oracle.hpp"
#include "spdhg/solvers.hpp"
#include "spdhg/theory.hpp"
#include "test_support.hpp"

using namespace spdhg;

namespace {

const Shape kScalar{1, 1, 1};

ComplexImage scalar(double v) {
  ComplexImage out(kScalar);
  out.data[0] = v;
  return out;
}

// n = 1, A = 1, f(y) = (y - 1)^2, g = 0
SaddleProblem scalar_problem() {
  LinearOperator A = scaled_identity(kScalar, 1.0);
  A.cache_norm_bound(1.0);
  return make_problem({{A, FunctionalDescriptor::squared_distance(scalar(1.0))}},
                      FunctionalDescriptor::zero());
}

// Hand-written scalar reference of both iterations for the instance above.
struct ScalarReference {
  double tau, sigma, b = 1.0;
  double x = 0, y = 0, y_prev = 0, z = 0, zbar = 0;
  double prox_dual(double v) const { return (v - sigma * b) / (1 + sigma / 2); }
  void spdhg() {  // p = 1
    x = x - tau * zbar;
    const double yn = prox_dual(y + sigma * x);
    const double delta = yn - y;
    z += delta;
    zbar = z + delta;
    y_prev = y;
    y = yn;
  }
  void pdhg() {
    x = x - tau * (2 * y - y_prev);
    const double yn = prox_dual(y + sigma * x);
    y_prev = y;
    y = yn;
  }
};

StepSizes fixed_steps(Algorithm a, double tau, std::vector<double> sigma) {
  StepSizes s;
  s.algorithm = a;
  s.tau = tau;
  s.sigma = std::move(sigma);
  return s;
}

mri::MriConfig toy_config() {
  mri::MriConfig c;
  c.rows = c.cols = 8;
  c.n_coils = 2;
  c.sampling_factor = 2;
  c.noise_sigma = 0.05;
  c.alpha = 0.05;
  c.seed = 3;
  return c;
}

}  // namespace

TEST_CASE("step sizes follow the gamma rules") {
  LinearOperator A1 = scaled_identity(kScalar, 1.0), A2 = scaled_identity(kScalar, 2.0);
  A1.cache_norm_bound(1.0);
  A2.cache_norm_bound(2.0);
  const auto f = FunctionalDescriptor::squared_distance(scalar(0.0));
  SaddleProblem p = make_problem({{A1, f}, {A2, f}}, FunctionalDescriptor::zero(), {0.5, 0.5});

  const StepSizes s = compute_step_sizes(p, 1.0, Algorithm::spdhg);
  CHECK(s.sigma[0] == doctest::Approx(0.5));
  CHECK(s.sigma[1] == doctest::Approx(0.25));
  CHECK(s.tau == doctest::Approx(0.495));
  CHECK(s.tau * s.sigma[0] * 1.0 == doctest::Approx(0.2475));
  CHECK(validate_step_sizes(p, s).empty());

  StepSizes doubled = s;
  doubled.tau *= 2;
  const auto v = validate_step_sizes(p, doubled);
  REQUIRE(v.size() == 1);
  CHECK(*v[0].block == 1);
  CHECK(v[0].lhs == doctest::Approx(0.99 * 4 * 0.25));
  CHECK(v[0].bound == 0.5);

  for (double gamma : default_gamma_grid()) {
    const StepSizes g = compute_step_sizes(p, gamma, Algorithm::spdhg);
    for (std::size_t i = 0; i < 2; ++i) {
      const double a = p.block_norms[i];
      CHECK(g.tau * g.sigma[i] * a * a / p.probabilities[i] ==
            doctest::Approx(0.99 * a / 2.0).epsilon(1e-12));
    }
    CHECK(contraction(p, g) < 1.0);
  }
}

TEST_CASE("pdhg step sizes and the strict condition") {
  SaddleProblem p = scalar_problem();
  const StepSizes s = compute_step_sizes(p, 1.0, Algorithm::pdhg);
  CHECK(s.sigma[0] == doctest::Approx(1.0));
  CHECK(s.tau == doctest::Approx(0.99));
  CHECK(validate_step_sizes(p, s).empty());

  const StepSizes edge = fixed_steps(Algorithm::spdhg, 1.0, {1.0});
  CHECK(validate_step_sizes(p, edge).size() == 1);
  CHECK(validate_step_sizes(p, fixed_steps(Algorithm::pdhg, 1.0, {1.0})).size() == 1);
}

TEST_CASE("degenerate block norms are rejected") {
  LinearOperator Z = scaled_identity(kScalar, 0.0);
  SaddleProblem p = make_problem({{Z, FunctionalDescriptor::squared_distance(scalar(1.0))}},
                                 FunctionalDescriptor::zero());
  CHECK_THROWS(compute_step_sizes(p, 1.0, Algorithm::spdhg));
  CHECK_THROWS(compute_step_sizes(scalar_problem(), 0.0, Algorithm::spdhg));
}

TEST_CASE("problem construction checks its invariants") {
  const auto f = FunctionalDescriptor::squared_distance(scalar(0.0));
  const LinearOperator A = scaled_identity(kScalar, 1.0);
  CHECK_THROWS(make_problem({}, FunctionalDescriptor::zero()));
  CHECK_THROWS(make_problem({{A, f}, {A, f}}, FunctionalDescriptor::zero(), {1.0, 0.0}));
  CHECK_THROWS(make_problem({{A, f}, {A, f}}, FunctionalDescriptor::zero(), {0.6, 0.6}));
  CHECK_THROWS_AS(make_problem({{A, f}, {scaled_identity(Shape{2, 1, 1}, 1.0), f}},
                               FunctionalDescriptor::zero()),
                  ShapeError);
}

TEST_CASE("first spdhg step on the scalar instance") {
  const SaddleProblem p = scalar_problem();
  const StepSizes s = fixed_steps(Algorithm::spdhg, 0.5, {0.5});
  SolverState st = initial_state(p, 0);
  spdhg_step(p, st, s);
  CHECK(st.x.data[0].real() == doctest::Approx(0.0));
  CHECK(st.y[0].data[0].real() == doctest::Approx(-0.4));
  CHECK(st.z.data[0].real() == doctest::Approx(-0.4));
  CHECK(st.zbar.data[0].real() == doctest::Approx(-0.8));
  CHECK(st.k == 1);
  CHECK(*st.last_block == 0);

  ScalarReference ref{0.5, 0.5};
  SolverState again = initial_state(p, 0);
  for (int k = 0; k < 30; ++k) {
    spdhg_step(p, again, s);
    ref.spdhg();
    CHECK(again.x.data[0].real() == doctest::Approx(ref.x).epsilon(1e-13));
    CHECK(again.y[0].data[0].real() == doctest::Approx(ref.y).epsilon(1e-13));
    CHECK(again.zbar.data[0].real() == doctest::Approx(ref.zbar).epsilon(1e-13));
  }
}

TEST_CASE("pdhg steps on the scalar instance") {
  const SaddleProblem p = scalar_problem();
  const StepSizes s = fixed_steps(Algorithm::pdhg, 0.5, {0.5});
  SolverState st = initial_state(p, 0);
  pdhg_step(p, st, s);
  CHECK(st.x.data[0].real() == doctest::Approx(0.0));
  CHECK(st.y[0].data[0].real() == doctest::Approx(-0.4));
  pdhg_step(p, st, s);
  CHECK(st.x.data[0].real() == doctest::Approx(0.4));

  ScalarReference ref{0.5, 0.5};
  SolverState again = initial_state(p, 0);
  for (int k = 0; k < 30; ++k) {
    pdhg_step(p, again, s);
    ref.pdhg();
    CHECK(again.x.data[0].real() == doctest::Approx(ref.x).epsilon(1e-13));
    CHECK(again.y[0].data[0].real() == doctest::Approx(ref.y).epsilon(1e-13));
  }
}

TEST_CASE("zero data keeps pdhg at zero") {
  Rng rng(20);
  const Shape s{4, 4, 1};
  std::vector<Block> blocks;
  for (int i = 0; i < 3; ++i) {
    auto op = testing::random_composition(s, rng);
    blocks.push_back({op, FunctionalDescriptor::squared_distance(ComplexImage(op.codomain()))});
  }
  const SaddleProblem p = make_problem(std::move(blocks), FunctionalDescriptor::zero());
  const StepSizes steps = compute_step_sizes(p, 1.0, Algorithm::pdhg);
  SolverState st = initial_state(p, 0);
  for (int k = 0; k < 10; ++k) pdhg_step(p, st, steps);
  CHECK(norm(st.x) == 0.0);
  for (const auto& y : st.y) CHECK(norm(y) == 0.0);
}

TEST_CASE("z tracks A^T y and y_prev tracks the previous dual iterate") {
  Rng rng(21);
  const SaddleProblem p = testing::random_quadratic_problem(Shape{4, 4, 1}, 3, 0.1, rng);
  for (Algorithm a : {Algorithm::spdhg, Algorithm::pdhg}) {
    const StepSizes steps = compute_step_sizes(p, 1.0, a);
    SolverState st = initial_state(p, 7);
    for (int k = 0; k < 60; ++k) {
      const auto y_before = st.y;
      a == Algorithm::spdhg ? spdhg_step(p, st, steps) : pdhg_step(p, st, steps);
      CHECK((st.z.data - stacked_adjoint(p, st.y).data).norm() < 1e-10);
      for (std::size_t i = 0; i < p.size(); ++i) CHECK(st.y_prev[i].data == y_before[i].data);
    }
  }
}

TEST_CASE("spdhg with one block reproduces pdhg") {
  Rng rng(22);
  const SaddleProblem p = testing::random_quadratic_problem(Shape{4, 4, 1}, 1, 0.3, rng);
  const StepSizes sp = compute_step_sizes(p, 1.0, Algorithm::spdhg);
  const StepSizes pd = compute_step_sizes(p, 1.0, Algorithm::pdhg);
  CHECK(sp.tau == pd.tau);
  SolverState a = initial_state(p, 1), b = initial_state(p, 1);
  for (int k = 0; k < 100; ++k) {
    spdhg_step(p, a, sp);
    pdhg_step(p, b, pd);
    CHECK((a.x.data - b.x.data).norm() < 1e-12);
    CHECK((a.y[0].data - b.y[0].data).norm() < 1e-12);
  }
}

TEST_CASE("a saddle point is a fixed point of the spdhg step") {
  Rng rng(23);
  const SaddleProblem p = testing::random_quadratic_problem(Shape{3, 3, 1}, 3, 0.2, rng);
  const PrimalDual saddle = solve_quadratic(p);
  const StepSizes steps = compute_step_sizes(p, 1.0, Algorithm::spdhg);
  for (std::size_t j = 0; j < p.size(); ++j) {
    SolverState st = initial_state(p, 0);
    st.x = saddle.x;
    st.y = saddle.y;
    st.y_prev = saddle.y;
    st.z = stacked_adjoint(p, saddle.y);
    st.zbar = st.z;
    spdhg_step_block(p, st, steps, j);
    CHECK((st.x.data - saddle.x.data).norm() < 1e-10);
    for (std::size_t i = 0; i < p.size(); ++i) CHECK((st.y[i].data - saddle.y[i].data).norm() < 1e-10);
  }
}

TEST_CASE("block sampling follows the probabilities") {
  Rng rng(24);
  const std::vector<double> probs{0.1, 0.6, 0.3};
  std::vector<int> counts(3, 0);
  const int draws = 60000;
  for (int i = 0; i < draws; ++i) ++counts[draw_block(probs, rng)];
  for (int i = 0; i < 3; ++i) CHECK(counts[i] / double(draws) == doctest::Approx(probs[i]).epsilon(0.03));
}

TEST_CASE("run logging contract") {
  const mri::MriInstance inst = mri::assemble_problem(toy_config());
  const StepSizes steps = compute_step_sizes(inst.problem, 1.0, Algorithm::spdhg);

  RunOptions none;
  none.epochs = 0;
  const auto empty = run(inst.problem, steps, none);
  REQUIRE(empty.records.size() == 1);
  CHECK(empty.records[0].epoch == 0.0);
  CHECK(empty.records[0].objective == doctest::Approx(objective(inst.problem, ComplexImage(inst.problem.domain()))));

  RunOptions opts;
  opts.epochs = 10;
  opts.log_every = 2;
  opts.seed = 5;
  opts.target = Target{inst.ground_truth, std::nullopt};
  const auto a = run(inst.problem, steps, opts);
  const auto b = run(inst.problem, steps, opts);
  REQUIRE(a.records.size() == 6);
  CHECK(a.records[0].relative_objective == 1.0);
  CHECK(a.records.back().epoch == 10.0);
  CHECK(a.state.k == 10 * static_cast<long long>(inst.problem.size()));
  for (std::size_t i = 0; i < a.records.size(); ++i) {
    CHECK(a.records[i].objective == b.records[i].objective);
    CHECK(*a.records[i].distance_to_target == *b.records[i].distance_to_target);
  }
  CHECK((a.state.x.data - b.state.x.data).norm() == 0.0);

  opts.seed = 6;
  const auto c = run(inst.problem, steps, opts);
  CHECK(c.records.back().objective != a.records.back().objective);
}

TEST_CASE("divergence guard names gamma") {
  const mri::MriInstance inst = mri::assemble_problem(toy_config());
  StepSizes bad = compute_step_sizes(inst.problem, 1.0, Algorithm::pdhg);
  bad.tau *= 1e4;
  bad.gamma = 123.0;
  RunOptions opts;
  opts.epochs = 2000;
  opts.log_every = 10;
  try {
    run(inst.problem, bad, opts);
    FAIL("expected divergence");
  } catch (const DivergenceError& e) {
    CHECK(e.gamma == 123.0);
    CHECK(std::string(e.what()).find("123") != std::string::npos);
  }
}

TEST_CASE("gamma search ranking") {
  const mri::MriInstance inst = mri::assemble_problem(toy_config());
  const SaddleProblem& p = inst.problem;

  const auto single = gamma_search(p, Algorithm::spdhg, {0.1}, 5, 0);
  CHECK(single.best_gamma == 0.1);
  CHECK_THROWS(gamma_search(p, Algorithm::spdhg, {}, 5, 0));

  const auto full = gamma_search(p, Algorithm::spdhg, default_gamma_grid(), 20, 0);
  REQUIRE(full.trials.size() == 11);
  double best = std::numeric_limits<double>::infinity();
  for (const auto& t : full.trials) best = std::min(best, t.final_objective);
  for (const auto& t : full.trials)
    if (t.gamma == full.best_gamma) CHECK(t.final_objective == best);
}

TEST_CASE("gamma search skips diverging runs") {
  // The cached bound is half the true norm, so tau*sigma*||A||^2 = 3.96 in
  // truth. Strong dual damping (large sigma) still converges; small sigma
  // does not.
  const Shape s{4, 4, 1};
  Rng rng(25);
  LinearOperator A = scaled_identity(s, 2.0);
  A.cache_norm_bound(1.0);
  SaddleProblem p = make_problem({{A, FunctionalDescriptor::squared_distance(random_image(s, rng))}},
                                 FunctionalDescriptor::zero());
  const auto res = gamma_search(p, Algorithm::pdhg, {1e-3, 1e3}, 400, 0);
  REQUIRE(res.trials.size() == 2);
  CHECK(res.trials[0].diverged);
  CHECK_FALSE(res.trials[1].diverged);
  CHECK(res.best_gamma == 1e3);
  CHECK_THROWS(gamma_search(p, Algorithm::pdhg, {1e-3}, 400, 0));
}

TEST_CASE("spdhg converges on the quadratic toy") {
  const mri::MriInstance inst = mri::assemble_problem(toy_config());
  const PrimalDual saddle = solve_quadratic(inst.problem);
  const auto search = gamma_search(inst.problem, Algorithm::spdhg, default_gamma_grid(), 100, 0);
  RunOptions opts;
  opts.epochs = 5000;
  opts.log_every = 5000;
  opts.target = Target{saddle.x, saddle};
  const auto res = run(inst.problem, compute_step_sizes(inst.problem, search.best_gamma, Algorithm::spdhg), opts);
  CHECK(*res.records.back().distance_to_target <= 1e-6);
  CHECK(*res.records.back().bregman_gap < *res.records.front().bregman_gap);
}
