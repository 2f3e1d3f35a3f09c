#pragma once

// ADMM solver for the self-representation subproblem
//
//   min_Z  tr(Z^T D Z C) + alpha tr(Z^T Z) - 2 tr(Z^T E)
//   s.t.   Z 1 = 1, Z >= 0
//
// with the split Z = H, multiplier Sigma and a geometrically growing
// penalty mu. Each Z-step is a row-wise Euclidean projection onto the
// probability simplex; each H-step is a clamp to the nonnegative orthant.
// Every step acts on rows independently, so each row carries its own mu.

#include <optional>
#include <vector>

#include "gfsel/graph_filter.hpp"

namespace gfsel {

/// Fixed data of one Z-subproblem. `sample_weights` is the diagonal of D,
/// `gram` is C (symmetric PSD) and `target` is E = D C + alpha A.
struct ZSubproblem {
  Vector sample_weights;
  Matrix gram;
  Matrix target;
  double alpha = 0.0;
  /// Optional low-rank factor F with C = F F^T; used for fast products.
  std::optional<Matrix> gram_factor;

  /// Builds C = (XW)(XW)^T and E from the projected smoothed data XW.
  static ZSubproblem from_projection(Vector sample_weights, const Matrix& projected,
                                     const Matrix& filter, double alpha);
  /// Builds E from an explicit Gram matrix.
  static ZSubproblem from_gram(Vector sample_weights, Matrix gram, const Matrix& filter,
                               double alpha);

  Index size() const noexcept { return gram.rows(); }

  /// Row-scaled product D * H * C.
  Matrix weighted_product(const Matrix& h) const;

  /// Per-row Lipschitz constants of the objective gradient,
  /// L_i = 2 (D_i lambda_max(C) + alpha). The objective separates over rows.
  Vector row_lipschitz() const;
};

enum class PenaltyScale {
  Absolute,      ///< mu values are used as given, shared by all rows
  RowLipschitz,  ///< mu values are multiples of each row's L_i
};

struct AdmmOptions {
  int max_inner = 200;
  double inner_tol = 1e-6;
  PenaltyScale scale = PenaltyScale::RowLipschitz;
  double initial_penalty = 0.3;
  double growth = 1.01;
  /// Keep above 0.5 under RowLipschitz: a row with D_i -> 0 has L_i = 2 alpha,
  /// and at mu = alpha the H-step no longer depends on Z.
  double max_penalty = 0.6;
  /// Start the multiplier at D Z0 C + alpha Z0 instead of zero. An optimal
  /// Z0 is then a fixed point of the iteration.
  bool warm_multiplier = true;

  /// Penalty schedule mu0 = 1, p = 1.01 with no problem scaling.
  static AdmmOptions unscaled() {
    AdmmOptions o;
    o.scale = PenaltyScale::Absolute;
    o.initial_penalty = 1.0;
    o.max_penalty = 1e10;
    o.warm_multiplier = false;
    return o;
  }
};

struct AdmmState {
  Matrix z;
  Matrix h;
  Matrix sigma;
  Vector mu;  ///< penalty per row
  double growth = 1.01;
  int iteration = 0;
};

struct AdmmResult {
  Matrix z;
  int iterations = 0;
  bool converged = false;     ///< every row met |Z - H|_inf, |H - H_prev|_inf <= inner_tol
  bool fell_back = false;     ///< objective rose above the start; Z0 returned
  int rows_reset = 0;         ///< rows that ended worse than Z0 and were restored
  bool tightening_ok = true;  ///< consensus non-increasing over the last 10 steps
  double initial_objective = 0.0;
  double final_objective = 0.0;
  std::vector<double> consensus_history;
};

/// Euclidean projection onto {x : x >= 0, sum x = 1}. Returns max(v + theta, 0)
/// with the same theta as the sort-and-threshold rule, found without sorting.
Vector project_simplex_row(const Eigen::Ref<const Vector>& v);

/// Applies project_simplex_row to every row.
Matrix project_simplex_rows(const Matrix& m);

/// Unconstrained minimizer of the augmented Lagrangian in Z:
/// M = H - Sigma/mu - (D H C + alpha H - 2 E)/mu.
Matrix compute_m(const AdmmState& state, const ZSubproblem& prob);

/// Unconstrained minimizer of the augmented Lagrangian in H:
/// N = Z + Sigma/mu - (D Z C + alpha Z)/mu.
Matrix compute_n(const AdmmState& state, const ZSubproblem& prob);

/// Elementwise max(N, 0).
Matrix step_h(const Matrix& n);

/// Value of the subproblem objective at Z.
double subproblem_objective(const ZSubproblem& prob, const Matrix& z);

/// Runs the ADMM iteration from a feasible Z0. The problem separates over
/// rows, so each row stops on its own and a row that ends above its Z0 value
/// is restored. Never returns a point whose objective exceeds the Z0 value
/// by more than 1e-8.
AdmmResult admm_solve_z(const ZSubproblem& prob, const Matrix& z0,
                        const AdmmOptions& options = {});

}  // namespace gfsel
