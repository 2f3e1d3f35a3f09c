#include "gfsel/admm.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>

#include "gfsel/errors.hpp"

namespace gfsel {

namespace {

constexpr double kDescentSlack = 1e-8;
constexpr std::size_t kTighteningWindow = 10;
constexpr double kMinLipschitz = 1e-12;

Matrix make_target(const Vector& weights, const Matrix& gram, const Matrix& filter, double alpha) {
  if (filter.rows() != gram.rows() || filter.cols() != gram.cols()) {
    throw InvalidInput("graph filter and Gram matrix sizes differ");
  }
  Matrix e = weights.asDiagonal() * gram;
  e += alpha * filter;
  return e;
}

void check_weights(const Vector& weights, Index n) {
  if (weights.size() != n) {
    throw InvalidInput("sample weight vector has length " + std::to_string(weights.size()) +
                       ", expected " + std::to_string(n));
  }
  if (!((weights.array() > 0.0).all()) || !weights.allFinite()) {
    throw InvalidInput("sample weights must be strictly positive and finite");
  }
}

}  // namespace

ZSubproblem ZSubproblem::from_projection(Vector sample_weights, const Matrix& projected,
                                         const Matrix& filter, double alpha) {
  check_weights(sample_weights, projected.rows());
  if (alpha < 0.0) {
    throw InvalidInput("alpha must be nonnegative");
  }
  ZSubproblem prob;
  prob.gram = projected * projected.transpose();
  prob.target = make_target(sample_weights, prob.gram, filter, alpha);
  prob.sample_weights = std::move(sample_weights);
  prob.alpha = alpha;
  prob.gram_factor = projected;
  return prob;
}

ZSubproblem ZSubproblem::from_gram(Vector sample_weights, Matrix gram, const Matrix& filter,
                                   double alpha) {
  if (gram.rows() != gram.cols()) {
    throw InvalidInput("Gram matrix must be square");
  }
  check_weights(sample_weights, gram.rows());
  if (alpha < 0.0) {
    throw InvalidInput("alpha must be nonnegative");
  }
  ZSubproblem prob;
  prob.target = make_target(sample_weights, gram, filter, alpha);
  prob.gram = std::move(gram);
  prob.sample_weights = std::move(sample_weights);
  prob.alpha = alpha;
  return prob;
}

Matrix ZSubproblem::weighted_product(const Matrix& h) const {
  Matrix out;
  if (gram_factor) {
    const Matrix t = h * (*gram_factor);
    out.noalias() = t * gram_factor->transpose();
  } else {
    out.noalias() = h * gram;
  }
  out.array().colwise() *= sample_weights.array();
  return out;
}

Vector ZSubproblem::row_lipschitz() const {
  double top = 0.0;
  if (gram_factor) {
    const Matrix small = gram_factor->transpose() * (*gram_factor);
    top = Eigen::SelfAdjointEigenSolver<Matrix>(small, Eigen::EigenvaluesOnly).eigenvalues().maxCoeff();
  } else if (gram.size() > 0) {
    top = Eigen::SelfAdjointEigenSolver<Matrix>(gram, Eigen::EigenvaluesOnly).eigenvalues().maxCoeff();
  }
  return (2.0 * (sample_weights.array() * std::max(top, 0.0) + alpha)).matrix();
}

namespace {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Projects the n values at `row` in place. `scratch` is reused across calls.
//
// The threshold is the one the sort-and-threshold rule produces: with u the
// values sorted descending, rho the last j where u_j + (1 - sum_{i<=j} u_i)/j
// is positive and theta = (1 - sum_{i<=rho} u_i)/rho. It is reached without
// sorting. For any candidate set S that contains the support,
// t = (1 - sum(S))/|S| satisfies sum(max(v + t, 0)) >= 1 and so bounds
// theta from above; every entry with x + t <= 0 is outside the support and
// can be dropped. Repeating until nothing is dropped leaves S equal to the
// support, where t is theta.
void project_in_place(double* row, Index n, std::vector<double>& scratch) {
  // The first bound comes from S = {argmax}: theta <= 1 - max(v).
  const double top = *std::max_element(row, row + n);
  scratch.clear();
  double total = 0.0;
  for (Index i = 0; i < n; ++i) {
    if (row[i] > top - 1.0) {
      scratch.push_back(row[i]);
      total += row[i];
    }
  }
  double theta = (1.0 - total) / static_cast<double>(scratch.size());
  for (;;) {
    std::size_t kept = 0;
    total = 0.0;
    for (const double x : scratch) {
      if (x + theta > 0.0) {
        scratch[kept++] = x;
        total += x;
      }
    }
    if (kept == scratch.size()) break;
    scratch.resize(kept);
    theta = (1.0 - total) / static_cast<double>(kept);
  }
  for (Index i = 0; i < n; ++i) row[i] = std::max(row[i] + theta, 0.0);
}

// Row-level evaluation of the two unconstrained minimizers. The subproblem
// separates over rows, so row i of M and N depends only on row i of the
// iterates.
class RowKernel {
 public:
  explicit RowKernel(const ZSubproblem& prob)
      : prob_(prob), target_(prob.target) {}

  Index size() const noexcept { return prob_.size(); }

  // out = row i of D X C, where x is row i of X.
  void product(Index i, const double* x, double* out) {
    const Index n = size();
    const Eigen::Map<const Vector> xv(x, n);
    Eigen::Map<Vector> result(out, n);
    if (prob_.gram_factor) {
      coeff_.noalias() = prob_.gram_factor->transpose() * xv;
      result.noalias() = *prob_.gram_factor * coeff_;
    } else {
      result.noalias() = prob_.gram * xv;  // C is symmetric
    }
    result *= prob_.sample_weights(i);
  }

  // Row i of M = H - (D H C + alpha H - 2E + Sigma) / mu. Returns false if
  // any entry is not finite.
  bool m_row(Index i, const double* h, const double* sigma, double mu, double* out) {
    product(i, h, out);
    const Index n = size();
    const double* e = target_.row(i).data();
    const double inv = 1.0 / mu;
    double probe = 0.0;
    for (Index j = 0; j < n; ++j) {
      out[j] = h[j] - inv * (out[j] + prob_.alpha * h[j] - 2.0 * e[j] + sigma[j]);
      probe += out[j] - out[j];
    }
    return probe == 0.0;
  }

  // Row i of the subproblem objective at z.
  double row_objective(Index i, const double* z) {
    const Index n = size();
    const Eigen::Map<const Vector> zv(z, n);
    double quad = 0.0;
    if (prob_.gram_factor) {
      coeff_.noalias() = prob_.gram_factor->transpose() * zv;
      quad = coeff_.squaredNorm();
    } else {
      quad = zv.dot(prob_.gram * zv);
    }
    const Eigen::Map<const Vector> e(target_.row(i).data(), n);
    return prob_.sample_weights(i) * quad + prob_.alpha * zv.squaredNorm() - 2.0 * zv.dot(e);
  }

  // Row i of N = Z - (D Z C + alpha Z - Sigma) / mu.
  bool n_row(Index i, const double* z, const double* sigma, double mu, double* out) {
    product(i, z, out);
    const Index n = size();
    const double inv = 1.0 / mu;
    double probe = 0.0;
    for (Index j = 0; j < n; ++j) {
      out[j] = z[j] - inv * (out[j] + prob_.alpha * z[j] - sigma[j]);
      probe += out[j] - out[j];
    }
    return probe == 0.0;
  }

 private:
  const ZSubproblem& prob_;
  RowMatrix target_;
  Vector coeff_;
};

void fail(const char* what, int iteration) {
  throw NumericalFailure(std::string("non-finite ") + what + " in Z-step ADMM", iteration);
}

template <typename RowFn>
Matrix apply_rows(const AdmmState& state, const ZSubproblem& prob, const Matrix& iterate,
                  RowFn fn) {
  const Index n = prob.size();
  RowKernel kernel(prob);
  const RowMatrix x = iterate;
  const RowMatrix sigma = state.sigma;
  RowMatrix out(n, n);
  for (Index i = 0; i < n; ++i) {
    fn(kernel, i, x.row(i).data(), sigma.row(i).data(), state.mu(i), out.row(i).data());
  }
  return out;
}

}  // namespace

Vector project_simplex_row(const Eigen::Ref<const Vector>& v) {
  if (v.size() == 0) {
    throw InvalidInput("cannot project an empty vector onto the simplex");
  }
  Vector out = v;
  std::vector<double> scratch;
  scratch.reserve(static_cast<std::size_t>(v.size()));
  project_in_place(out.data(), out.size(), scratch);
  return out;
}

Matrix project_simplex_rows(const Matrix& m) {
  if (m.cols() == 0) {
    throw InvalidInput("cannot project an empty vector onto the simplex");
  }
  RowMatrix rows = m;
  std::vector<double> scratch;
  scratch.reserve(static_cast<std::size_t>(m.cols()));
  for (Index i = 0; i < rows.rows(); ++i) project_in_place(rows.row(i).data(), rows.cols(), scratch);
  return rows;
}

Matrix compute_m(const AdmmState& state, const ZSubproblem& prob) {
  return apply_rows(state, prob, state.h,
                    [](RowKernel& k, Index i, const double* h, const double* sigma, double mu,
                       double* out) { k.m_row(i, h, sigma, mu, out); });
}

Matrix compute_n(const AdmmState& state, const ZSubproblem& prob) {
  return apply_rows(state, prob, state.z,
                    [](RowKernel& k, Index i, const double* z, const double* sigma, double mu,
                       double* out) { k.n_row(i, z, sigma, mu, out); });
}

Matrix step_h(const Matrix& n) { return n.cwiseMax(0.0); }

double subproblem_objective(const ZSubproblem& prob, const Matrix& z) {
  Vector quad;
  if (prob.gram_factor) {
    quad = (z * (*prob.gram_factor)).rowwise().squaredNorm();
  } else {
    quad = (z * prob.gram).cwiseProduct(z).rowwise().sum();
  }
  return prob.sample_weights.dot(quad) + prob.alpha * z.squaredNorm() -
         2.0 * z.cwiseProduct(prob.target).sum();
}

AdmmResult admm_solve_z(const ZSubproblem& prob, const Matrix& z0, const AdmmOptions& options) {
  const Index n = prob.size();
  if (z0.rows() != n || z0.cols() != n) {
    throw InvalidInput("initial Z must be " + std::to_string(n) + "x" + std::to_string(n));
  }
  if (!(options.inner_tol > 0.0) || options.max_inner < 0 || !(options.initial_penalty > 0.0) ||
      !(options.growth > 1.0) || !(options.max_penalty >= options.initial_penalty)) {
    throw InvalidInput("invalid ADMM options");
  }

  AdmmResult result;
  result.initial_objective = subproblem_objective(prob, z0);
  result.z = z0;
  result.final_objective = result.initial_objective;
  if (n == 1) {
    result.converged = true;
    return result;
  }

  Vector mu = Vector::Constant(n, options.initial_penalty);
  Vector mu_cap = Vector::Constant(n, options.max_penalty);
  if (options.scale == PenaltyScale::RowLipschitz) {
    const Vector lip = prob.row_lipschitz().cwiseMax(kMinLipschitz);
    mu = mu.cwiseProduct(lip);
    mu_cap = mu_cap.cwiseProduct(lip);
  }

  // Rows are independent problems; each one stops on its own test and the
  // reported residuals are maxima over all rows.
  RowKernel kernel(prob);
  RowMatrix z = z0;
  RowMatrix h = z0;
  RowMatrix sigma = RowMatrix::Zero(n, n);
  if (options.warm_multiplier) {
    sigma = prob.weighted_product(z0);
    sigma += prob.alpha * z0;
  }
  Vector row_consensus = Vector::Zero(n);
  std::vector<char> active(static_cast<std::size_t>(n), 1);
  Index remaining = n;
  Vector buffer(n);
  std::vector<double> scratch;
  scratch.reserve(static_cast<std::size_t>(n));
  result.consensus_history.reserve(static_cast<std::size_t>(options.max_inner));

  for (int it = 1; it <= options.max_inner && remaining > 0; ++it) {
    for (Index i = 0; i < n; ++i) {
      if (!active[static_cast<std::size_t>(i)]) continue;
      double* zi = z.row(i).data();
      double* hi = h.row(i).data();
      double* si = sigma.row(i).data();
      double* buf = buffer.data();

      if (!kernel.m_row(i, hi, si, mu(i), buf)) fail("Z-step target", it);
      project_in_place(buf, n, scratch);
      std::copy(buf, buf + n, zi);

      if (!kernel.n_row(i, zi, si, mu(i), buf)) fail("H-step target", it);
      double drift = 0.0;
      double consensus = 0.0;
      for (Index j = 0; j < n; ++j) {
        const double next = std::max(buf[j], 0.0);
        drift = std::max(drift, std::abs(next - hi[j]));
        hi[j] = next;
        const double gap = zi[j] - next;
        consensus = std::max(consensus, std::abs(gap));
        si[j] += mu(i) * gap;
      }
      mu(i) = std::min(mu(i) * options.growth, mu_cap(i));
      row_consensus(i) = consensus;
      if (consensus <= options.inner_tol && drift <= options.inner_tol) {
        active[static_cast<std::size_t>(i)] = 0;
        --remaining;
      }
    }
    result.consensus_history.push_back(row_consensus.maxCoeff());
    result.iterations = it;
  }
  result.converged = remaining == 0;

  if (result.converged && result.consensus_history.size() >= kTighteningWindow) {
    const auto& hist = result.consensus_history;
    for (std::size_t i = hist.size() - kTighteningWindow + 1; i < hist.size(); ++i) {
      if (hist[i] > hist[i - 1]) {
        result.tightening_ok = false;
        break;
      }
    }
  }

  // Rows that ended above their starting value are reset to Z0.
  const RowMatrix start = z0;
  for (Index i = 0; i < n; ++i) {
    if (kernel.row_objective(i, z.row(i).data()) > kernel.row_objective(i, start.row(i).data())) {
      z.row(i) = start.row(i);
      ++result.rows_reset;
    }
  }

  const Matrix z_out = z;
  const double value = subproblem_objective(prob, z_out);
  if (!std::isfinite(value)) {
    throw NumericalFailure("non-finite Z-subproblem objective", result.iterations);
  }
  if (value > result.initial_objective + kDescentSlack) {
    result.fell_back = true;
    return result;
  }
  result.z = z_out;
  result.final_objective = value;
  return result;
}

}  // namespace gfsel
