#include "gfsel/graph_filter.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <vector>

#include "gfsel/errors.hpp"

namespace gfsel {

namespace {

constexpr double kSymmetryTolerance = 1e-8;

Matrix pairwise_squared_distances(const Matrix& x) {
  const Index n = x.rows();
  Matrix dist = Matrix::Zero(n, n);
  for (Index i = 0; i < n; ++i) {
    for (Index j = i + 1; j < n; ++j) {
      const double v = (x.row(i) - x.row(j)).squaredNorm();
      dist(i, j) = v;
      dist(j, i) = v;
    }
  }
  return dist;
}

}  // namespace

DataMatrix::DataMatrix(Matrix values) : values_(std::move(values)) {
  if (values_.rows() < 2) {
    throw InvalidInput("data matrix needs at least 2 samples, got " +
                       std::to_string(values_.rows()));
  }
  if (values_.cols() < 1) {
    throw InvalidInput("data matrix needs at least 1 feature");
  }
  for (Index j = 0; j < values_.cols(); ++j) {
    for (Index i = 0; i < values_.rows(); ++i) {
      if (!std::isfinite(values_(i, j))) {
        throw InvalidInput("non-finite value at sample " + std::to_string(i) +
                           ", feature " + std::to_string(j));
      }
    }
  }
}

Matrix DataMatrix::columns(const std::vector<Index>& indices) const {
  Matrix out(values_.rows(), static_cast<Index>(indices.size()));
  for (std::size_t c = 0; c < indices.size(); ++c) {
    if (indices[c] < 0 || indices[c] >= values_.cols()) {
      throw InvalidInput("feature index " + std::to_string(indices[c]) + " out of range");
    }
    out.col(static_cast<Index>(c)) = values_.col(indices[c]);
  }
  return out;
}

double median_bandwidth(const DataMatrix& x) {
  const Matrix& v = x.values();
  const Index n = v.rows();
  std::vector<double> dists;
  dists.reserve(static_cast<std::size_t>(n * (n - 1) / 2));
  for (Index i = 0; i < n; ++i) {
    for (Index j = i + 1; j < n; ++j) {
      dists.push_back((v.row(i) - v.row(j)).norm());
    }
  }
  const std::size_t m = dists.size();
  const auto mid = dists.begin() + static_cast<std::ptrdiff_t>(m / 2);
  std::nth_element(dists.begin(), mid, dists.end());
  double median = *mid;
  if (m % 2 == 0) {
    const double lower = *std::max_element(dists.begin(), mid);
    median = 0.5 * (lower + median);
  }
  return std::max(median, kMinBandwidth);
}

SimilarityGraph build_knn_graph(const DataMatrix& x, int k, double bandwidth) {
  const Index n = x.samples();
  if (k < 1 || k > n - 1) {
    throw InvalidInput("neighbor count k=" + std::to_string(k) + " outside [1, " +
                       std::to_string(n - 1) + "]");
  }
  if (!(bandwidth > 0.0) || !std::isfinite(bandwidth)) {
    throw InvalidInput("bandwidth must be positive and finite");
  }
  const Matrix dist = pairwise_squared_distances(x.values());
  const double scale = bandwidth * bandwidth;

  Matrix s = Matrix::Zero(n, n);
  std::vector<Index> order(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) {
    std::iota(order.begin(), order.end(), Index{0});
    order.erase(order.begin() + i);
    std::partial_sort(order.begin(), order.begin() + k, order.end(), [&](Index a, Index b) {
      const double da = dist(i, a);
      const double db = dist(i, b);
      return da < db || (da == db && a < b);
    });
    for (int r = 0; r < k; ++r) {
      const Index j = order[static_cast<std::size_t>(r)];
      s(i, j) = std::exp(-dist(i, j) / scale);
    }
    order.resize(static_cast<std::size_t>(n));
  }
  for (Index i = 0; i < n; ++i) {
    s(i, i) = 0.0;
    for (Index j = i + 1; j < n; ++j) {
      const double w = std::max(s(i, j), s(j, i));
      s(i, j) = w;
      s(j, i) = w;
    }
  }
  return SimilarityGraph{std::move(s), k, bandwidth};
}

Laplacian normalized_laplacian(const Matrix& similarity) {
  const Index n = similarity.rows();
  if (similarity.cols() != n || n == 0) {
    throw InvalidInput("similarity matrix must be square and non-empty");
  }
  Vector degrees = similarity.rowwise().sum();
  for (Index i = 0; i < n; ++i) {
    if (!(degrees(i) > 0.0)) {
      throw InvalidInput("vertex " + std::to_string(i) +
                         " is isolated (zero degree); increase the neighbor count k");
    }
  }
  const Vector inv_sqrt = degrees.array().rsqrt();
  Matrix g = inv_sqrt.asDiagonal() * similarity * inv_sqrt.asDiagonal();
  // Explicit mirror so that L is exactly symmetric regardless of rounding order.
  for (Index i = 0; i < n; ++i) {
    for (Index j = i + 1; j < n; ++j) {
      g(j, i) = g(i, j);
    }
  }
  Matrix l = Matrix::Identity(n, n) - g;
  return Laplacian{std::move(l), std::move(g), std::move(degrees)};
}

GraphFilter heat_kernel_filter(const Matrix& laplacian, double eta) {
  if (laplacian.rows() != laplacian.cols() || laplacian.rows() == 0) {
    throw InvalidInput("Laplacian must be square and non-empty");
  }
  if (!(eta >= 0.0) || !std::isfinite(eta)) {
    throw InvalidInput("filter temperature eta must be finite and nonnegative");
  }
  const double asym = (laplacian - laplacian.transpose()).cwiseAbs().maxCoeff();
  if (asym > kSymmetryTolerance) {
    throw InvalidInput("Laplacian is not symmetric (max asymmetry " + std::to_string(asym) + ")");
  }

  Eigen::SelfAdjointEigenSolver<Matrix> eig(laplacian);
  if (eig.info() != Eigen::Success) {
    throw NumericalFailure("symmetric eigendecomposition of the Laplacian failed", 0);
  }
  const Vector& values = eig.eigenvalues();
  const Matrix& vectors = eig.eigenvectors();
  const Vector decay = (-eta * values.cwiseMax(0.0)).array().exp();
  Matrix a = vectors * decay.asDiagonal() * vectors.transpose();
  a = 0.5 * (a + a.transpose()).eval();

  return GraphFilter{laplacian, std::move(a), eta, values, vectors};
}

Matrix smooth(const GraphFilter& filter, const DataMatrix& x) {
  if (filter.kernel.cols() != x.samples()) {
    throw InvalidInput("filter built on " + std::to_string(filter.kernel.cols()) +
                       " samples applied to data with " + std::to_string(x.samples()));
  }
  return filter.kernel * x.values();
}

}  // namespace gfsel
