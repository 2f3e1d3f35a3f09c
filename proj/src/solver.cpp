#include "gfsel/solver.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <string>

#include "gfsel/errors.hpp"

namespace gfsel {

namespace {

constexpr double kObjectiveFloor = 1e-12;

Vector floored_half_inverse(const Vector& norms) {
  return (2.0 * norms.array().max(kReweightFloor)).inverse().matrix();
}

void check_same_rows(const Matrix& a, const Matrix& b, const char* what) {
  if (a.rows() != b.rows()) {
    throw InvalidInput(std::string("dimension mismatch: ") + what);
  }
}

Matrix residual(const Matrix& xbar, const Matrix& w, const Matrix& z) {
  if (xbar.cols() != w.rows()) {
    throw InvalidInput("dimension mismatch: smoothed data has " + std::to_string(xbar.cols()) +
                       " features, W has " + std::to_string(w.rows()) + " rows");
  }
  if (z.rows() != xbar.rows() || z.cols() != xbar.rows()) {
    throw InvalidInput("dimension mismatch: Z must be n x n with n = " +
                       std::to_string(xbar.rows()));
  }
  const Matrix projected = xbar * w;
  return projected - z * projected;
}

}  // namespace

void Hyperparameters::validate(Index samples, Index features) const {
  if (!(alpha >= 0.0) || !std::isfinite(alpha)) throw InvalidInput("alpha must be >= 0");
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw InvalidInput("lambda must be >= 0");
  if (clusters < 1 || clusters > std::min(samples, features)) {
    throw InvalidInput("cluster count c=" + std::to_string(clusters) + " outside [1, min(n, d)=" +
                       std::to_string(std::min(samples, features)) + "]");
  }
  if (neighbors < 1 || neighbors > samples - 1) {
    throw InvalidInput("neighbor count k=" + std::to_string(neighbors) + " outside [1, n-1=" +
                       std::to_string(samples - 1) + "]");
  }
  if (!(eta >= 0.0) || !std::isfinite(eta)) throw InvalidInput("eta must be >= 0");
  if (max_outer_iters < 1) throw InvalidInput("max_outer_iters must be positive");
  if (!(outer_tol > 0.0)) throw InvalidInput("outer_tol must be positive");
  if (admm.max_inner < 0 || !(admm.inner_tol > 0.0)) {
    throw InvalidInput("inner ADMM limits must be nonnegative iterations and positive tolerance");
  }
}

std::vector<Index> FeatureRanking::top(Index m) const {
  if (m < 0 || m > static_cast<Index>(order.size())) {
    throw InvalidInput("cannot select " + std::to_string(m) + " of " +
                       std::to_string(order.size()) + " features");
  }
  return {order.begin(), order.begin() + m};
}

double l21_norm(const Matrix& m) { return m.rowwise().norm().sum(); }

double objective(const Matrix& xbar, const Matrix& w, const Matrix& z, const Matrix& filter,
                 double alpha, double lambda) {
  check_same_rows(z, filter, "Z and graph filter");
  if (z.cols() != filter.cols()) throw InvalidInput("dimension mismatch: Z and graph filter");
  return l21_norm(residual(xbar, w, z)) + alpha * (z - filter).squaredNorm() +
         lambda * l21_norm(w);
}

Matrix smallest_eigenvectors(const Matrix& m, int c) {
  if (m.rows() != m.cols()) throw InvalidInput("eigenproblem matrix must be square");
  if (c < 1 || c > m.rows()) {
    throw InvalidInput("requested " + std::to_string(c) + " eigenvectors of a " +
                       std::to_string(m.rows()) + "-dimensional problem");
  }
  const Matrix sym = 0.5 * (m + m.transpose());
  Eigen::SelfAdjointEigenSolver<Matrix> eig(sym);
  if (eig.info() != Eigen::Success) {
    throw NumericalFailure("symmetric eigendecomposition failed in W-step", 0);
  }
  Matrix w = eig.eigenvectors().leftCols(c);
  for (Index j = 0; j < w.cols(); ++j) {
    Index pivot = 0;
    w.col(j).cwiseAbs().maxCoeff(&pivot);
    if (w(pivot, j) < 0.0) w.col(j) = -w.col(j);
  }
  return w;
}

Matrix update_w(const Matrix& xbar, const Matrix& z, const Vector& sample_weights,
                const Vector& feature_weights, double lambda, int c) {
  if (c > xbar.cols()) {
    throw InvalidInput("projection dimension c=" + std::to_string(c) + " exceeds feature count " +
                       std::to_string(xbar.cols()));
  }
  if (sample_weights.size() != xbar.rows() || feature_weights.size() != xbar.cols()) {
    throw InvalidInput("dimension mismatch: reweighting diagonals");
  }
  if (z.rows() != xbar.rows() || z.cols() != xbar.rows()) {
    throw InvalidInput("dimension mismatch: Z must be n x n");
  }
  const Matrix r = xbar - z * xbar;  // (I - Z) X
  Matrix weighted = r;
  weighted.array().colwise() *= sample_weights.array();
  Matrix m = r.transpose() * weighted;
  m.diagonal() += lambda * feature_weights;
  return smallest_eigenvectors(m, c);
}

Vector reweight_d(const Matrix& xbar, const Matrix& w, const Matrix& z) {
  return floored_half_inverse(residual(xbar, w, z).rowwise().norm());
}

Vector reweight_q(const Matrix& w) { return floored_half_inverse(w.rowwise().norm()); }

Matrix initial_projection(Index features, int c, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix g(features, c);
  for (Index j = 0; j < g.cols(); ++j) {
    for (Index i = 0; i < g.rows(); ++i) g(i, j) = normal(rng);
  }
  Eigen::HouseholderQR<Matrix> qr(g);
  return qr.householderQ() * Matrix::Identity(features, c);
}

FitResult fit_smoothed(const Matrix& xbar, const Matrix& filter, const Hyperparameters& params,
                       const IterationObserver& observer) {
  const Index n = xbar.rows();
  const Index d = xbar.cols();
  params.validate(n, d);
  if (filter.rows() != n || filter.cols() != n) {
    throw InvalidInput("graph filter must be n x n with n = " + std::to_string(n));
  }

  FitResult result;
  result.w = initial_projection(d, params.clusters, params.seed);
  if (params.z_init == ZInit::Random) {
    std::mt19937_64 rng(params.seed ^ 0x9e3779b97f4a7c15ULL);
    std::uniform_real_distribution<double> uniform(0.0, 1.0);
    Matrix draw(n, n);
    for (Index j = 0; j < n; ++j) {
      for (Index i = 0; i < n; ++i) draw(i, j) = uniform(rng);
    }
    result.z = project_simplex_rows(draw);
  } else {
    result.z = project_simplex_rows(filter);
  }

  Vector dvec = reweight_d(xbar, result.w, result.z);
  Vector qvec = reweight_q(result.w);
  double previous = objective(xbar, result.w, result.z, filter, params.alpha, params.lambda);
  if (!std::isfinite(previous)) throw NumericalFailure("non-finite initial objective", 0);
  result.objective_history.push_back(previous);

  for (int t = 1; t <= params.max_outer_iters; ++t) {
    result.w = update_w(xbar, result.z, dvec, qvec, params.lambda, params.clusters);

    const ZSubproblem prob =
        ZSubproblem::from_projection(dvec, xbar * result.w, filter, params.alpha);
    AdmmResult inner = admm_solve_z(prob, result.z, params.admm);
    result.z = std::move(inner.z);
    result.inner_iterations.push_back(inner.iterations);
    if (inner.fell_back) ++result.inner_fallbacks;

    dvec = reweight_d(xbar, result.w, result.z);
    qvec = reweight_q(result.w);
    const double current =
        objective(xbar, result.w, result.z, filter, params.alpha, params.lambda);
    if (!std::isfinite(current)) throw NumericalFailure("non-finite objective", t);
    result.objective_history.push_back(current);
    result.iterations = t;

    if (observer) observer(IterationSnapshot{t, result.w, result.z, current, inner});

    const double change = std::abs(previous - current) / std::max(std::abs(current), kObjectiveFloor);
    previous = current;
    if (change <= params.outer_tol) {
      result.converged = true;
      break;
    }
  }
  return result;
}

FitResult fit(const DataMatrix& x, const Hyperparameters& params,
              const IterationObserver& observer) {
  params.validate(x.samples(), x.features());
  const double bandwidth = median_bandwidth(x);
  const SimilarityGraph graph = build_knn_graph(x, params.neighbors, bandwidth);
  const Laplacian lap = normalized_laplacian(graph);
  const GraphFilter filter = heat_kernel_filter(lap.laplacian, params.eta);
  const Matrix xbar = smooth(filter, x);
  FitResult result = fit_smoothed(xbar, filter.kernel, params, observer);
  result.bandwidth = bandwidth;
  return result;
}

FeatureRanking rank_features(const Matrix& w) {
  FeatureRanking ranking;
  ranking.scores = w.rowwise().norm();
  ranking.order.resize(static_cast<std::size_t>(w.rows()));
  std::iota(ranking.order.begin(), ranking.order.end(), Index{0});
  std::stable_sort(ranking.order.begin(), ranking.order.end(),
                   [&](Index a, Index b) { return ranking.scores(a) > ranking.scores(b); });
  return ranking;
}

}  // namespace gfsel
