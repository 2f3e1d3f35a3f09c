#pragma once

// Clustering-based evaluation of a feature selection.

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "gfsel/graph_filter.hpp"
#include "gfsel/solver.hpp"

namespace gfsel {

/// Labels in [0, num_classes).
class LabelVector {
 public:
  LabelVector() = default;
  /// num_classes defaults to max label + 1.
  explicit LabelVector(std::vector<int> labels, std::optional<int> num_classes = std::nullopt);

  const std::vector<int>& labels() const noexcept { return labels_; }
  int num_classes() const noexcept { return num_classes_; }
  std::size_t size() const noexcept { return labels_.size(); }
  int operator[](std::size_t i) const { return labels_[i]; }

 private:
  std::vector<int> labels_;
  int num_classes_ = 0;
};

struct ClusteringMetrics {
  double acc = 0.0;
  double nmi = 0.0;
  double purity = 0.0;
};

struct KMeansResult {
  LabelVector labels;
  Matrix centroids;
  double inertia = 0.0;
  int iterations = 0;
};

inline constexpr int kKMeansMaxIters = 300;

/// Lloyd's algorithm from c distinct rows drawn uniformly with the seed.
/// An empty cluster is reseeded at the point farthest from its centroid.
KMeansResult kmeans(const Matrix& x, int c, std::uint64_t seed, int max_iters = kKMeansMaxIters);

/// Optimal assignment on a square profit matrix (Hungarian method). Returns
/// column index per row maximizing the total profit.
std::vector<int> max_weight_assignment(const Matrix& profit);

/// Contingency table with rows indexed by pred and columns by truth.
Matrix contingency(const LabelVector& pred, const LabelVector& truth);

double acc(const LabelVector& pred, const LabelVector& truth);
double nmi(const LabelVector& pred, const LabelVector& truth);
double purity(const LabelVector& pred, const LabelVector& truth);
ClusteringMetrics clustering_metrics(const LabelVector& pred, const LabelVector& truth);

struct SelectionEvaluation {
  ClusteringMetrics mean;
  std::vector<ClusteringMetrics> runs;
  std::vector<std::uint64_t> seeds;
};

/// k-means on the given columns repeated `runs` times with seeds seed + r.
SelectionEvaluation evaluate_columns(const Matrix& selected, const LabelVector& truth, int c,
                                     int runs, std::uint64_t seed);

/// evaluate_columns on the top-m ranked features.
SelectionEvaluation evaluate_selection(const DataMatrix& x, const FeatureRanking& ranking, Index m,
                                       const LabelVector& truth, int c, int runs,
                                       std::uint64_t seed);

struct SweepCell {
  double alpha = 0.0;
  double lambda = 0.0;
  bool failed = false;
  std::string error;
  int iterations = 0;
  bool converged = false;
  std::vector<Index> ranking;               ///< full feature order
  std::vector<SelectionEvaluation> per_m;   ///< aligned with feature_counts
  ClusteringMetrics mean_over_m;
};

struct SweepReport {
  std::vector<int> feature_counts;
  int runs_per_cell = 0;
  std::uint64_t seed = 0;
  std::vector<SweepCell> cells;  ///< alpha-major grid order
  std::optional<std::size_t> best_cell;
};

struct SweepOptions {
  int runs = 20;
  int workers = 1;
};

/// Grid search over (alpha, lambda); one fit per cell, evaluated at every
/// feature count. A cell that throws is recorded as failed.
SweepReport sweep(const DataMatrix& x, const LabelVector& truth, std::span<const double> alphas,
                  std::span<const double> lambdas, std::span<const int> feature_counts,
                  const Hyperparameters& base, const SweepOptions& options = {});

}  // namespace gfsel
