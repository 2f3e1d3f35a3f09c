#pragma once

// Fixtures and independent oracles shared by the unit tests and the
// acceptance binary. Nothing here calls into the code paths it is used to
// check, except where noted.

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "gfsel/admm.hpp"
#include "gfsel/graph_filter.hpp"

namespace gfsel::testing {

struct Blobs {
  Matrix x;
  std::vector<int> labels;
  int informative = 0;
};

/// Three Gaussian blobs of n samples. Centers are uniform in [-box, box] on
/// the informative columns, within-blob spread is unit normal, the noise
/// columns are pure N(0, 1), labels cycle i % 3 and every column is then
/// centered and scaled to unit variance.
inline Blobs make_blobs(std::uint64_t seed, int n = 150, int informative = 10, int noise = 90,
                        double box = 10.0) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> uniform(-box, box);

  Matrix centers(3, informative);
  for (int a = 0; a < 3; ++a)
    for (int j = 0; j < informative; ++j) centers(a, j) = uniform(rng);

  Blobs b;
  b.informative = informative;
  b.x.resize(n, informative + noise);
  b.labels.resize(n);
  for (int i = 0; i < n; ++i) {
    b.labels[i] = i % 3;
    for (int j = 0; j < informative; ++j) b.x(i, j) = centers(b.labels[i], j) + normal(rng);
    for (int j = informative; j < informative + noise; ++j) b.x(i, j) = normal(rng);
  }
  for (Index j = 0; j < b.x.cols(); ++j) {
    const double mean = b.x.col(j).mean();
    b.x.col(j).array() -= mean;
    b.x.col(j) /= std::sqrt(b.x.col(j).squaredNorm() / n);
  }
  return b;
}

inline Matrix random_normal(std::mt19937_64& rng, Index rows, Index cols) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix m(rows, cols);
  for (Index i = 0; i < rows; ++i)
    for (Index j = 0; j < cols; ++j) m(i, j) = normal(rng);
  return m;
}

/// Normalized Laplacian of a kNN graph on random points in R^dim.
inline Matrix random_laplacian(std::mt19937_64& rng, Index n, int k = 3, Index dim = 4) {
  const DataMatrix points(random_normal(rng, n, dim));
  const auto graph = build_knn_graph(points, k, median_bandwidth(points));
  return normalized_laplacian(graph).laplacian;
}

/// sum_{t=0}^{terms} (-eta L)^t / t!
inline Matrix taylor_heat_kernel(const Matrix& laplacian, double eta, int terms = 30) {
  const Index n = laplacian.rows();
  Matrix sum = Matrix::Identity(n, n);
  Matrix term = Matrix::Identity(n, n);
  for (int t = 1; t <= terms; ++t) {
    term = (-eta / t) * (term * laplacian);
    sum += term;
  }
  return sum;
}

/// Simplex projection by enumerating every support set: on support S the
/// equality-constrained projection is v_S + theta with theta fixed by the
/// sum; the feasible candidate nearest to v wins.
inline Vector active_set_projection(const Vector& v) {
  const Index n = v.size();
  Vector best;
  double best_dist = INFINITY;
  for (std::uint64_t mask = 1; mask < (std::uint64_t{1} << n); ++mask) {
    double sum = 0.0;
    int size = 0;
    for (Index i = 0; i < n; ++i) {
      if (mask >> i & 1) {
        sum += v(i);
        ++size;
      }
    }
    const double theta = (1.0 - sum) / size;
    Vector x = Vector::Zero(n);
    bool feasible = true;
    for (Index i = 0; i < n; ++i) {
      if (!(mask >> i & 1)) continue;
      x(i) = v(i) + theta;
      if (x(i) < 0.0) feasible = false;
    }
    if (!feasible) continue;
    const double dist = (x - v).squaredNorm();
    if (dist < best_dist) {
      best_dist = dist;
      best = x;
    }
  }
  return best;
}

/// Random Z-subproblem: heat kernel of a 3-NN graph, Gram matrix of an n x 3
/// normal draw, D log-uniform in [0.1, 10], alpha uniform in [0.1, 2.1].
struct ZInstance {
  ZSubproblem prob;
  Matrix filter;
  Matrix z0;
};

inline ZInstance random_z_instance(std::mt19937_64& rng, Index n) {
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  const Matrix laplacian = random_laplacian(rng, n);
  const Matrix filter = heat_kernel_filter(laplacian, 1.0).kernel;
  const Matrix projected = random_normal(rng, n, 3);
  Vector weights(n);
  for (Index i = 0; i < n; ++i) weights(i) = 0.1 * std::pow(100.0, uniform(rng));
  const double alpha = 0.1 + 2.0 * uniform(rng);
  return {ZSubproblem::from_projection(weights, projected, filter, alpha), filter,
          project_simplex_rows(filter)};
}

/// Projected gradient on the row-separable objective with per-row step
/// 1 / (L_i (1 + k / 20000)). The gradient is formed from the raw matrices;
/// only the simplex projection is shared with the code under test.
inline Matrix projected_gradient(const ZSubproblem& prob, Matrix z, int steps) {
  const Index n = prob.size();
  Vector lipschitz(n);
  const double top = Eigen::SelfAdjointEigenSolver<Matrix>(prob.gram).eigenvalues().maxCoeff();
  for (Index i = 0; i < n; ++i) lipschitz(i) = 2.0 * (prob.sample_weights(i) * top + prob.alpha);
  for (int k = 0; k < steps; ++k) {
    Matrix grad = 2.0 * (prob.sample_weights.asDiagonal() * z * prob.gram + prob.alpha * z -
                         prob.target);
    grad.array().colwise() /= lipschitz.array() * (1.0 + k / 20000.0);
    z = project_simplex_rows(z - grad);
  }
  return z;
}

/// tr(Z^T D Z C) + alpha |Z|^2 - 2 tr(Z^T E) written as explicit loops.
inline double loop_subproblem_objective(const ZSubproblem& prob, const Matrix& z) {
  const Index n = z.rows();
  double value = 0.0;
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < n; ++j) {
      double zc = 0.0;
      for (Index l = 0; l < n; ++l) zc += z(i, l) * prob.gram(l, j);
      value += prob.sample_weights(i) * zc * z(i, j);
      value += prob.alpha * z(i, j) * z(i, j) - 2.0 * z(i, j) * prob.target(i, j);
    }
  }
  return value;
}

}  // namespace gfsel::testing
