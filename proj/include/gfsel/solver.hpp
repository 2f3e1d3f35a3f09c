#pragma once

// Alternating minimization of
//
//   |X W - Z X W|_{2,1} + alpha |Z - A|_F^2 + lambda |W|_{2,1}
//   s.t. W^T W = I, Z 1 = 1, Z >= 0
//
// where X is the heat-kernel-smoothed data and A the graph filter. The
// l2,1 terms are handled by iterative reweighting: W minimizes a trace
// form over the Stiefel manifold, Z is solved by ADMM.

#include <cstdint>
#include <functional>
#include <vector>

#include "gfsel/admm.hpp"
#include "gfsel/graph_filter.hpp"

namespace gfsel {

/// Floor on row norms inside the reweighting diagonals.
inline constexpr double kReweightFloor = 1e-8;

enum class ZInit {
  ProjectedFilter,  ///< row-wise simplex projection of A
  Random,           ///< seeded uniform draw, then projected
};

struct Hyperparameters {
  double alpha = 1.0;
  double lambda = 1.0;
  int clusters = 0;  ///< projection dimension c
  int neighbors = 5;
  double eta = 1.0;
  int max_outer_iters = 50;
  double outer_tol = 1e-4;
  std::uint64_t seed = 42;
  ZInit z_init = ZInit::ProjectedFilter;
  AdmmOptions admm;

  /// Throws InvalidInput if any field is out of range for an n x d dataset.
  void validate(Index samples, Index features) const;
};

struct ReweightState {
  Vector sample_weights;   ///< diagonal of D
  Vector feature_weights;  ///< diagonal of Q
};

struct FitResult {
  Matrix w;
  Matrix z;
  /// Objective at the initial point followed by one value per iteration.
  std::vector<double> objective_history;
  int iterations = 0;
  bool converged = false;
  double bandwidth = 0.0;
  std::vector<int> inner_iterations;
  int inner_fallbacks = 0;
};

struct FeatureRanking {
  Vector scores;             ///< row norms of W
  std::vector<Index> order;  ///< descending score, ties by ascending index

  std::vector<Index> top(Index m) const;
};

/// Per-iteration view handed to a fit observer.
struct IterationSnapshot {
  int iteration;
  const Matrix& w;
  const Matrix& z;
  double objective;
  const AdmmResult& inner;
};

using IterationObserver = std::function<void(const IterationSnapshot&)>;

/// Sum of row 2-norms.
double l21_norm(const Matrix& m);

double objective(const Matrix& xbar, const Matrix& w, const Matrix& z, const Matrix& filter,
                 double alpha, double lambda);

/// Eigenvectors of the c smallest eigenvalues of the symmetric part of m,
/// ascending. Each column has its largest-magnitude entry made positive.
Matrix smallest_eigenvectors(const Matrix& m, int c);

/// W-step: smallest eigenvectors of X^T (I-Z)^T D (I-Z) X + lambda Q.
Matrix update_w(const Matrix& xbar, const Matrix& z, const Vector& sample_weights,
                const Vector& feature_weights, double lambda, int c);

/// D_ii = 1 / (2 max(|row i of XW - ZXW|, floor)).
Vector reweight_d(const Matrix& xbar, const Matrix& w, const Matrix& z);

/// Q_ii = 1 / (2 max(|W_i|, floor)).
Vector reweight_q(const Matrix& w);

/// Orthonormalized seeded Gaussian d x c matrix.
Matrix initial_projection(Index features, int c, std::uint64_t seed);

/// Runs the full pipeline: bandwidth, kNN graph, filter, smoothing and the
/// alternating minimization. Deterministic for a given seed.
FitResult fit(const DataMatrix& x, const Hyperparameters& params,
              const IterationObserver& observer = {});

/// Same as fit() but on precomputed smoothed data and filter.
FitResult fit_smoothed(const Matrix& xbar, const Matrix& filter, const Hyperparameters& params,
                       const IterationObserver& observer = {});

FeatureRanking rank_features(const Matrix& w);

}  // namespace gfsel
