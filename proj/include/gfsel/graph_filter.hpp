#pragma once

// kNN similarity graph, normalized Laplacian and heat-kernel graph filter.

#include <vector>

#include <Eigen/Dense>

namespace gfsel {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

/// Floor applied to the median bandwidth when most samples coincide.
inline constexpr double kMinBandwidth = 1e-12;

/// Sample-by-feature matrix (rows are samples). Construction validates
/// n >= 2, d >= 1 and finiteness of every entry.
class DataMatrix {
 public:
  explicit DataMatrix(Matrix values);

  const Matrix& values() const noexcept { return values_; }
  Index samples() const noexcept { return values_.rows(); }
  Index features() const noexcept { return values_.cols(); }

  /// Copy of the given columns, in the given order.
  Matrix columns(const std::vector<Index>& indices) const;

 private:
  Matrix values_;
};

struct SimilarityGraph {
  Matrix weights;  ///< symmetric, zero diagonal, entries in [0, 1]
  int neighbors = 0;
  double bandwidth = 0.0;
};

struct Laplacian {
  Matrix laplacian;   ///< I - G
  Matrix transition;  ///< G = D^{-1/2} S D^{-1/2}
  Vector degrees;     ///< row sums of S
};

struct GraphFilter {
  Matrix laplacian;
  Matrix kernel;  ///< exp(-eta L)
  double eta = 0.0;
  Vector eigenvalues;  ///< spectrum of L, ascending, before clamping
  Matrix eigenvectors;
};

/// Median of all pairwise Euclidean distances (mean of the two central
/// values for an even count), floored at kMinBandwidth.
double median_bandwidth(const DataMatrix& x);

/// Directed kNN edges weighted by exp(-|xi - xj|^2 / delta^2), then
/// symmetrized by union (elementwise max). Distance ties go to the smaller
/// sample index.
SimilarityGraph build_knn_graph(const DataMatrix& x, int k, double bandwidth);

/// Throws InvalidInput naming the first vertex with zero degree.
Laplacian normalized_laplacian(const Matrix& similarity);
inline Laplacian normalized_laplacian(const SimilarityGraph& graph) {
  return normalized_laplacian(graph.weights);
}

/// exp(-eta L) through the symmetric eigendecomposition of L. Negative
/// round-off eigenvalues are clamped to zero before exponentiation.
GraphFilter heat_kernel_filter(const Matrix& laplacian, double eta);

/// Smoothed data A X.
Matrix smooth(const GraphFilter& filter, const DataMatrix& x);

}  // namespace gfsel
