#include <doctest.h>

#include <cmath>
#include <random>

#include "gfsel/admm.hpp"
#include "gfsel/errors.hpp"
#include "support.hpp"

using namespace gfsel;
using namespace gfsel::testing;

namespace {

Vector vec(std::initializer_list<double> xs) {
  Vector v(static_cast<Index>(xs.size()));
  Index i = 0;
  for (double x : xs) v(i++) = x;
  return v;
}

double max_abs(const Matrix& m) { return m.cwiseAbs().maxCoeff(); }

AdmmState random_state(std::mt19937_64& rng, Index n) {
  std::uniform_real_distribution<double> uniform(0.5, 3.0);
  AdmmState s;
  s.z = project_simplex_rows(random_normal(rng, n, n));
  s.h = random_normal(rng, n, n).cwiseAbs();
  s.sigma = random_normal(rng, n, n);
  s.mu.resize(n);
  for (Index i = 0; i < n; ++i) s.mu(i) = uniform(rng);
  return s;
}

// Central-difference gradient. Exact up to round-off for quadratics, so the
// step can be large.
template <typename F>
Matrix numeric_gradient(F f, const Matrix& at, double step = 1e-2) {
  Matrix g(at.rows(), at.cols());
  for (Index i = 0; i < at.rows(); ++i) {
    for (Index j = 0; j < at.cols(); ++j) {
      Matrix plus = at, minus = at;
      plus(i, j) += step;
      minus(i, j) -= step;
      g(i, j) = (f(plus) - f(minus)) / (2.0 * step);
    }
  }
  return g;
}

// D X C for diagonal D, by explicit loops.
Matrix loop_weighted_product(const Vector& d, const Matrix& x, const Matrix& c) {
  Matrix out = Matrix::Zero(x.rows(), c.cols());
  for (Index i = 0; i < x.rows(); ++i)
    for (Index j = 0; j < c.cols(); ++j)
      for (Index l = 0; l < x.cols(); ++l) out(i, j) += d(i) * x(i, l) * c(l, j);
  return out;
}

// <G, X> + <Sigma, sign (Z - H)> + sum_i mu_i / 2 |Z_i - H_i|^2.
double augmented(const Matrix& g, const Matrix& sigma, const Vector& mu, const Matrix& z,
                 const Matrix& h, const Matrix& x) {
  double value = g.cwiseProduct(x).sum() + sigma.cwiseProduct(z - h).sum();
  for (Index i = 0; i < z.rows(); ++i) value += 0.5 * mu(i) * (z.row(i) - h.row(i)).squaredNorm();
  return value;
}

}  // namespace

TEST_SUITE("admm") {

TEST_CASE("projection of points already on the simplex") {
  const Vector x = project_simplex_row(vec({0.5, 0.5}));
  CHECK(x(0) == 0.5);
  CHECK(x(1) == 0.5);
}

TEST_CASE("projection by hand") {
  const Vector x = project_simplex_row(vec({2.0, 0.0}));
  CHECK(x(0) == 1.0);
  CHECK(x(1) == 0.0);

  const Vector y = project_simplex_row(vec({0.3, 0.3, 0.3}));
  for (Index i = 0; i < 3; ++i) CHECK(y(i) == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
}

TEST_CASE("projection of (2, 0) satisfies the KKT conditions") {
  // x = v + theta + nu with nu >= 0, nu_i x_i = 0: theta = -1, nu_2 = 1.
  const Vector v = vec({2.0, 0.0});
  const Vector x = project_simplex_row(v);
  const double theta = -1.0;
  const Vector nu = x.array() - v.array() - theta;
  CHECK(nu(0) == 0.0);
  CHECK(nu(1) == 1.0);
  CHECK(nu.cwiseProduct(x).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("projection matches support-set enumeration") {
  std::mt19937_64 rng(101);
  std::uniform_real_distribution<double> uniform(-5.0, 5.0);
  for (int trial = 0; trial < 1000; ++trial) {
    Vector v(6);
    for (Index i = 0; i < 6; ++i) v(i) = uniform(rng);
    CHECK((project_simplex_row(v) - active_set_projection(v)).cwiseAbs().maxCoeff() <= 1e-9);
  }
}

TEST_CASE("projection with ties matches support-set enumeration") {
  std::mt19937_64 rng(103);
  std::uniform_int_distribution<int> level(-4, 4);
  for (int trial = 0; trial < 300; ++trial) {
    Vector v(7);
    for (Index i = 0; i < 7; ++i) v(i) = 0.25 * level(rng);
    CHECK((project_simplex_row(v) - active_set_projection(v)).cwiseAbs().maxCoeff() <= 1e-12);
  }
}

TEST_CASE("projection is idempotent and lands on the simplex") {
  std::mt19937_64 rng(107);
  for (int trial = 0; trial < 500; ++trial) {
    const Index n = 1 + trial % 40;
    const Vector v = 3.0 * random_normal(rng, n, 1);
    const Vector x = project_simplex_row(v);
    CHECK(x.minCoeff() >= 0.0);
    CHECK(std::abs(x.sum() - 1.0) <= 1e-12);
    CHECK((project_simplex_row(x) - x).cwiseAbs().maxCoeff() <= 1e-12);
  }
}

TEST_CASE("projection of an empty vector is an error") {
  CHECK_THROWS_AS(project_simplex_row(Vector(0)), InvalidInput);
}

TEST_CASE("row-wise projection agrees with the single-row form") {
  std::mt19937_64 rng(109);
  const Matrix m = random_normal(rng, 9, 13);
  const Matrix p = project_simplex_rows(m);
  for (Index i = 0; i < 9; ++i) {
    CHECK((p.row(i).transpose() - project_simplex_row(m.row(i).transpose())).cwiseAbs().maxCoeff() ==
          0.0);
  }
}

TEST_CASE("M-step with vanishing corrections returns H") {
  std::mt19937_64 rng(113);
  const Index n = 5;
  AdmmState s = random_state(rng, n);
  s.sigma.setZero();
  const Matrix gram = random_normal(rng, n, n);
  const Matrix a = Matrix::Zero(n, n);
  const auto prob = ZSubproblem::from_gram(Vector::Constant(n, 1e-300), gram * gram.transpose(), a, 0.0);
  CHECK(max_abs(compute_m(s, prob) - s.h) <= 1e-12);
}

TEST_CASE("M-step with only the target term is H + 2E / mu") {
  std::mt19937_64 rng(127);
  const Index n = 5;
  AdmmState s = random_state(rng, n);
  s.sigma.setZero();
  const Matrix g = random_normal(rng, n, 2);
  auto prob = ZSubproblem::from_gram(Vector::Constant(n, 1e-300), g * g.transpose(),
                                     Matrix::Zero(n, n), 0.0);
  prob.target = random_normal(rng, n, n);
  const Matrix expected = s.h + 2.0 * (s.mu.cwiseInverse().asDiagonal() * prob.target);
  CHECK(max_abs(compute_m(s, prob) - expected) <= 1e-12);
}

TEST_CASE("M-step is stationary for the linearized Lagrangian in Z") {
  std::mt19937_64 rng(131);
  for (int trial = 0; trial < 5; ++trial) {
    const Index n = 6;
    const AdmmState s = random_state(rng, n);
    const auto inst = random_z_instance(rng, n);
    const Matrix g = loop_weighted_product(inst.prob.sample_weights, s.h, inst.prob.gram) +
                     inst.prob.alpha * s.h - 2.0 * inst.prob.target;
    const Matrix m = compute_m(s, inst.prob);
    const Matrix grad = numeric_gradient(
        [&](const Matrix& z) { return augmented(g, s.sigma, s.mu, z, s.h, z); }, m);
    CHECK(max_abs(grad) <= 1e-8);
  }
}

TEST_CASE("N-step with vanishing corrections returns Z") {
  std::mt19937_64 rng(137);
  const Index n = 4;
  AdmmState s = random_state(rng, n);
  s.sigma.setZero();
  const auto prob = ZSubproblem::from_gram(Vector::Ones(n), Matrix::Zero(n, n), Matrix::Zero(n, n), 0.0);
  CHECK(max_abs(compute_n(s, prob) - s.z) <= 1e-15);
}

TEST_CASE("N-step with only alpha is a scalar shrinkage") {
  std::mt19937_64 rng(139);
  const Index n = 4;
  AdmmState s = random_state(rng, n);
  s.sigma.setZero();
  const double alpha = 0.3;
  const Matrix g = random_normal(rng, n, 3);
  const auto prob =
      ZSubproblem::from_gram(Vector::Constant(n, 1e-300), g * g.transpose(), Matrix::Zero(n, n), alpha);
  const Matrix expected = (Vector::Ones(n) - alpha * s.mu.cwiseInverse()).asDiagonal() * s.z;
  CHECK(max_abs(compute_n(s, prob) - expected) <= 1e-14);
}

TEST_CASE("N-step is stationary for the linearized Lagrangian in H") {
  std::mt19937_64 rng(149);
  for (int trial = 0; trial < 5; ++trial) {
    const Index n = 6;
    const AdmmState s = random_state(rng, n);
    const auto inst = random_z_instance(rng, n);
    const Matrix g =
        loop_weighted_product(inst.prob.sample_weights, s.z, inst.prob.gram) + inst.prob.alpha * s.z;
    const Matrix nmat = compute_n(s, inst.prob);
    const Matrix grad = numeric_gradient(
        [&](const Matrix& h) { return augmented(g, s.sigma, s.mu, s.z, h, h); }, nmat);
    CHECK(max_abs(grad) <= 1e-8);
  }
}

TEST_CASE("H-step clamps to the nonnegative orthant") {
  Matrix n(2, 2);
  n << -1, 2, 0, -3;
  Matrix expected(2, 2);
  expected << 0, 2, 0, 0;
  CHECK(max_abs(step_h(n) - expected) == 0.0);

  std::mt19937_64 rng(151);
  const Matrix pos = random_normal(rng, 5, 5).cwiseAbs();
  CHECK(max_abs(step_h(pos) - pos) == 0.0);

  const Matrix r = random_normal(rng, 8, 8);
  const Matrix h = step_h(r);
  for (Index i = 0; i < 8; ++i)
    for (Index j = 0; j < 8; ++j) CHECK(h(i, j) == (r(i, j) > 0.0 ? r(i, j) : 0.0));
}

TEST_CASE("subproblem objective matches explicit loops") {
  std::mt19937_64 rng(157);
  const auto inst = random_z_instance(rng, 12);
  const Matrix z = project_simplex_rows(random_normal(rng, 12, 12));
  const double expected = loop_subproblem_objective(inst.prob, z);
  CHECK(subproblem_objective(inst.prob, z) == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("subproblem builders validate their inputs") {
  const Matrix a = Matrix::Identity(3, 3);
  CHECK_THROWS_AS(ZSubproblem::from_gram(Vector::Ones(3), Matrix::Identity(4, 4), a, 1.0), InvalidInput);
  CHECK_THROWS_AS(ZSubproblem::from_gram(Vector::Zero(3), a, a, 1.0), InvalidInput);
  CHECK_THROWS_AS(ZSubproblem::from_gram(Vector::Ones(3), a, a, -1.0), InvalidInput);
}

TEST_CASE("single sample returns the unit matrix") {
  const auto prob = ZSubproblem::from_gram(Vector::Ones(1), Matrix::Constant(1, 1, 2.0),
                                           Matrix::Constant(1, 1, 1.0), 1.0);
  const auto r = admm_solve_z(prob, Matrix::Constant(1, 1, 1.0));
  CHECK(r.z(0, 0) == 1.0);
  CHECK(r.iterations == 0);
  CHECK(r.converged);
}

TEST_CASE("without the reconstruction term the solution is the projected filter") {
  std::mt19937_64 rng(163);
  const Index n = 15;
  const Matrix a = heat_kernel_filter(random_laplacian(rng, n), 1.0).kernel;
  const Matrix g = random_normal(rng, n, 3);
  const auto prob = ZSubproblem::from_gram(Vector::Constant(n, 1e-12), g * g.transpose(), a, 0.8);
  const Matrix z0 = Matrix::Constant(n, n, 1.0 / n);
  for (const auto& options : {AdmmOptions{}, AdmmOptions::unscaled()}) {
    const auto r = admm_solve_z(prob, z0, options);
    CHECK(max_abs(r.z - project_simplex_rows(a)) <= 1e-5);
  }
}

TEST_CASE("solver output is close to a long projected-gradient run") {
  std::mt19937_64 rng(167);
  for (Index n : {10, 20}) {
    const auto inst = random_z_instance(rng, n);
    const Matrix reference = projected_gradient(inst.prob, inst.z0, 20000);
    const double best = subproblem_objective(inst.prob, reference);
    AdmmOptions options;
    options.max_inner = 1000;
    const auto r = admm_solve_z(inst.prob, inst.z0, options);
    CHECK((r.final_objective - best) / std::abs(best) <= 1e-4);
    CHECK(r.final_objective <= r.initial_objective + 1e-8);
  }
}

TEST_CASE("every iteration keeps Z on the simplex and H nonnegative") {
  // Algorithm steps driven through the public primitives.
  std::mt19937_64 rng(173);
  const auto inst = random_z_instance(rng, 12);
  AdmmState s;
  s.z = inst.z0;
  s.h = inst.z0;
  s.sigma = Matrix::Zero(12, 12);
  s.mu = Vector::Ones(12);
  for (int it = 0; it < 100; ++it) {
    s.z = project_simplex_rows(compute_m(s, inst.prob));
    CHECK(s.z.minCoeff() >= 0.0);
    CHECK((s.z.rowwise().sum().array() - 1.0).abs().maxCoeff() <= 1e-9);
    s.h = step_h(compute_n(s, inst.prob));
    CHECK(s.h.minCoeff() >= 0.0);
    s.sigma += s.mu.asDiagonal() * (s.z - s.h);
    s.mu *= 1.01;
  }
}

TEST_CASE("returned Z is feasible and never worse than the start") {
  std::mt19937_64 rng(179);
  for (int trial = 0; trial < 30; ++trial) {
    const Index n = 5 + trial;
    const auto inst = random_z_instance(rng, n);
    for (const auto& options : {AdmmOptions{}, AdmmOptions::unscaled()}) {
      const auto r = admm_solve_z(inst.prob, inst.z0, options);
      CHECK(r.z.minCoeff() >= 0.0);
      CHECK((r.z.rowwise().sum().array() - 1.0).abs().maxCoeff() <= 1e-9);
      CHECK(r.final_objective <= r.initial_objective + 1e-8);
      CHECK(r.final_objective == doctest::Approx(subproblem_objective(inst.prob, r.z)));
    }
  }
}

TEST_CASE("tightening flag agrees with the recorded consensus") {
  std::mt19937_64 rng(181);
  for (int trial = 0; trial < 20; ++trial) {
    const auto inst = random_z_instance(rng, 8 + trial);
    const auto r = admm_solve_z(inst.prob, inst.z0);
    const auto& h = r.consensus_history;
    bool monotone = true;
    if (r.converged && h.size() >= 10) {
      for (std::size_t t = h.size() - 9; t < h.size(); ++t) monotone = monotone && h[t] <= h[t - 1];
    }
    CHECK(r.tightening_ok == monotone);
  }
}

TEST_CASE("converged runs end with consensus under tolerance") {
  std::mt19937_64 rng(191);
  AdmmOptions options;
  options.max_inner = 2000;
  const auto inst = random_z_instance(rng, 10);
  const auto r = admm_solve_z(inst.prob, inst.z0, options);
  REQUIRE(r.converged);
  CHECK(r.consensus_history.back() <= options.inner_tol);
}

TEST_CASE("invalid options and shapes are rejected") {
  std::mt19937_64 rng(193);
  const auto inst = random_z_instance(rng, 6);
  AdmmOptions bad;
  bad.inner_tol = 0.0;
  CHECK_THROWS_AS(admm_solve_z(inst.prob, inst.z0, bad), InvalidInput);
  bad = AdmmOptions{};
  bad.growth = 1.0;
  CHECK_THROWS_AS(admm_solve_z(inst.prob, inst.z0, bad), InvalidInput);
  CHECK_THROWS_AS(admm_solve_z(inst.prob, Matrix::Identity(5, 5)), InvalidInput);
}

TEST_CASE("non-finite data is reported as a numerical failure") {
  std::mt19937_64 rng(197);
  auto inst = random_z_instance(rng, 6);
  inst.prob.target(2, 3) = NAN;
  inst.prob.gram_factor.reset();
  CHECK_THROWS_AS(admm_solve_z(inst.prob, inst.z0), NumericalFailure);
}

}
