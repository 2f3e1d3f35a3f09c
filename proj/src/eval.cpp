#include "gfsel/eval.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <string>
#include <thread>

#include "gfsel/errors.hpp"

namespace gfsel {

namespace {

void check_lengths(const LabelVector& pred, const LabelVector& truth) {
  if (pred.size() != truth.size()) {
    throw InvalidInput("label vectors differ in length: " + std::to_string(pred.size()) + " vs " +
                       std::to_string(truth.size()));
  }
  if (pred.size() == 0) throw InvalidInput("label vectors are empty");
}

double entropy(const Vector& counts, double total) {
  double h = 0.0;
  for (Index i = 0; i < counts.size(); ++i) {
    if (counts(i) > 0.0) {
      const double p = counts(i) / total;
      h -= p * std::log(p);
    }
  }
  return h;
}

// True when every nonempty row and column of the table has one nonzero cell.
bool one_to_one(const Matrix& table) {
  for (Index i = 0; i < table.rows(); ++i) {
    if ((table.row(i).array() > 0.0).count() > 1) return false;
  }
  for (Index j = 0; j < table.cols(); ++j) {
    if ((table.col(j).array() > 0.0).count() > 1) return false;
  }
  return true;
}

ClusteringMetrics mean_of(const std::vector<ClusteringMetrics>& runs) {
  ClusteringMetrics m;
  if (runs.empty()) return m;
  for (const auto& r : runs) {
    m.acc += r.acc;
    m.nmi += r.nmi;
    m.purity += r.purity;
  }
  const double k = static_cast<double>(runs.size());
  m.acc /= k;
  m.nmi /= k;
  m.purity /= k;
  return m;
}

}  // namespace

LabelVector::LabelVector(std::vector<int> labels, std::optional<int> num_classes)
    : labels_(std::move(labels)) {
  int max_label = -1;
  for (std::size_t i = 0; i < labels_.size(); ++i) {
    if (labels_[i] < 0) {
      throw InvalidInput("negative label at position " + std::to_string(i));
    }
    max_label = std::max(max_label, labels_[i]);
  }
  num_classes_ = num_classes.value_or(max_label + 1);
  if (max_label >= num_classes_) {
    throw InvalidInput("label " + std::to_string(max_label) + " outside [0, " +
                       std::to_string(num_classes_) + ")");
  }
}

KMeansResult kmeans(const Matrix& x, int c, std::uint64_t seed, int max_iters) {
  const Index n = x.rows();
  if (c < 1) throw InvalidInput("cluster count must be positive");
  if (c > n) {
    throw InvalidInput("cluster count " + std::to_string(c) + " exceeds sample count " +
                       std::to_string(n));
  }

  std::mt19937_64 rng(seed);
  std::vector<Index> pool(static_cast<std::size_t>(n));
  std::iota(pool.begin(), pool.end(), Index{0});
  Matrix centroids(c, x.cols());
  for (int j = 0; j < c; ++j) {
    std::uniform_int_distribution<Index> pick(j, n - 1);
    std::swap(pool[static_cast<std::size_t>(j)], pool[static_cast<std::size_t>(pick(rng))]);
    centroids.row(j) = x.row(pool[static_cast<std::size_t>(j)]);
  }

  std::vector<int> assign(static_cast<std::size_t>(n), -1);
  Vector dist(n);
  KMeansResult result;
  for (int it = 1; it <= max_iters; ++it) {
    bool changed = false;
    for (Index i = 0; i < n; ++i) {
      int best = 0;
      double best_d = std::numeric_limits<double>::infinity();
      for (int j = 0; j < c; ++j) {
        const double dj = (x.row(i) - centroids.row(j)).squaredNorm();
        if (dj < best_d) {
          best_d = dj;
          best = j;
        }
      }
      dist(i) = best_d;
      if (assign[static_cast<std::size_t>(i)] != best) {
        assign[static_cast<std::size_t>(i)] = best;
        changed = true;
      }
    }
    result.iterations = it;
    if (!changed) break;

    Matrix sums = Matrix::Zero(c, x.cols());
    std::vector<Index> counts(static_cast<std::size_t>(c), 0);
    for (Index i = 0; i < n; ++i) {
      const int j = assign[static_cast<std::size_t>(i)];
      sums.row(j) += x.row(i);
      ++counts[static_cast<std::size_t>(j)];
    }
    for (int j = 0; j < c; ++j) {
      if (counts[static_cast<std::size_t>(j)] > 0) {
        centroids.row(j) = sums.row(j) / static_cast<double>(counts[static_cast<std::size_t>(j)]);
      } else {
        Index far = 0;
        dist.maxCoeff(&far);
        centroids.row(j) = x.row(far);
        dist(far) = -1.0;
      }
    }
  }

  result.inertia = 0.0;
  for (Index i = 0; i < n; ++i) {
    result.inertia += (x.row(i) - centroids.row(assign[static_cast<std::size_t>(i)])).squaredNorm();
  }
  result.labels = LabelVector(std::move(assign), c);
  result.centroids = std::move(centroids);
  return result;
}

std::vector<int> max_weight_assignment(const Matrix& profit) {
  const Index n = profit.rows();
  if (profit.cols() != n) throw InvalidInput("assignment matrix must be square");
  if (n == 0) return {};
  // Shortest augmenting path Hungarian method on cost = max - profit, 1-based.
  const double top = profit.maxCoeff();
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(static_cast<std::size_t>(n + 1), 0.0), v(static_cast<std::size_t>(n + 1), 0.0);
  std::vector<Index> p(static_cast<std::size_t>(n + 1), 0), way(static_cast<std::size_t>(n + 1), 0);
  auto cost = [&](Index i, Index j) { return top - profit(i - 1, j - 1); };
  for (Index i = 1; i <= n; ++i) {
    p[0] = i;
    Index j0 = 0;
    std::vector<double> minv(static_cast<std::size_t>(n + 1), inf);
    std::vector<char> used(static_cast<std::size_t>(n + 1), 0);
    do {
      used[static_cast<std::size_t>(j0)] = 1;
      const Index i0 = p[static_cast<std::size_t>(j0)];
      double delta = inf;
      Index j1 = 0;
      for (Index j = 1; j <= n; ++j) {
        const auto sj = static_cast<std::size_t>(j);
        if (used[sj]) continue;
        const double cur = cost(i0, j) - u[static_cast<std::size_t>(i0)] - v[sj];
        if (cur < minv[sj]) {
          minv[sj] = cur;
          way[sj] = j0;
        }
        if (minv[sj] < delta) {
          delta = minv[sj];
          j1 = j;
        }
      }
      for (Index j = 0; j <= n; ++j) {
        const auto sj = static_cast<std::size_t>(j);
        if (used[sj]) {
          u[static_cast<std::size_t>(p[sj])] += delta;
          v[sj] -= delta;
        } else {
          minv[sj] -= delta;
        }
      }
      j0 = j1;
    } while (p[static_cast<std::size_t>(j0)] != 0);
    do {
      const Index j1 = way[static_cast<std::size_t>(j0)];
      p[static_cast<std::size_t>(j0)] = p[static_cast<std::size_t>(j1)];
      j0 = j1;
    } while (j0 != 0);
  }
  std::vector<int> row_to_col(static_cast<std::size_t>(n), -1);
  for (Index j = 1; j <= n; ++j) {
    row_to_col[static_cast<std::size_t>(p[static_cast<std::size_t>(j)] - 1)] = static_cast<int>(j - 1);
  }
  return row_to_col;
}

Matrix contingency(const LabelVector& pred, const LabelVector& truth) {
  check_lengths(pred, truth);
  Matrix table = Matrix::Zero(std::max(pred.num_classes(), 1), std::max(truth.num_classes(), 1));
  for (std::size_t i = 0; i < pred.size(); ++i) table(pred[i], truth[i]) += 1.0;
  return table;
}

double acc(const LabelVector& pred, const LabelVector& truth) {
  const Matrix table = contingency(pred, truth);
  const Index k = std::max(table.rows(), table.cols());
  Matrix square = Matrix::Zero(k, k);
  square.topLeftCorner(table.rows(), table.cols()) = table;
  const std::vector<int> match = max_weight_assignment(square);
  double matched = 0.0;
  for (Index i = 0; i < k; ++i) matched += square(i, match[static_cast<std::size_t>(i)]);
  return matched / static_cast<double>(pred.size());
}

double nmi(const LabelVector& pred, const LabelVector& truth) {
  const Matrix table = contingency(pred, truth);
  const double total = static_cast<double>(pred.size());
  const Vector row_sums = table.rowwise().sum();
  const Vector col_sums = table.colwise().sum().transpose();
  const double hp = entropy(row_sums, total);
  const double ht = entropy(col_sums, total);
  if (hp <= 0.0 || ht <= 0.0) {
    return (hp <= 0.0 && ht <= 0.0) || one_to_one(table) ? 1.0 : 0.0;
  }
  double mutual = 0.0;
  for (Index i = 0; i < table.rows(); ++i) {
    for (Index j = 0; j < table.cols(); ++j) {
      const double nij = table(i, j);
      if (nij > 0.0) {
        mutual += (nij / total) * std::log(total * nij / (row_sums(i) * col_sums(j)));
      }
    }
  }
  return std::clamp(mutual / std::sqrt(hp * ht), 0.0, 1.0);
}

double purity(const LabelVector& pred, const LabelVector& truth) {
  const Matrix table = contingency(pred, truth);
  return table.rowwise().maxCoeff().sum() / static_cast<double>(pred.size());
}

ClusteringMetrics clustering_metrics(const LabelVector& pred, const LabelVector& truth) {
  return ClusteringMetrics{acc(pred, truth), nmi(pred, truth), purity(pred, truth)};
}

SelectionEvaluation evaluate_columns(const Matrix& selected, const LabelVector& truth, int c,
                                     int runs, std::uint64_t seed) {
  if (runs < 1) throw InvalidInput("evaluation needs at least one run");
  if (static_cast<std::size_t>(selected.rows()) != truth.size()) {
    throw InvalidInput("label count does not match sample count");
  }
  SelectionEvaluation out;
  out.runs.reserve(static_cast<std::size_t>(runs));
  for (int r = 0; r < runs; ++r) {
    const std::uint64_t s = seed + static_cast<std::uint64_t>(r);
    const KMeansResult km = kmeans(selected, c, s);
    out.runs.push_back(clustering_metrics(km.labels, truth));
    out.seeds.push_back(s);
  }
  out.mean = mean_of(out.runs);
  return out;
}

SelectionEvaluation evaluate_selection(const DataMatrix& x, const FeatureRanking& ranking, Index m,
                                       const LabelVector& truth, int c, int runs,
                                       std::uint64_t seed) {
  if (m < 1 || m > x.features()) {
    throw InvalidInput("feature count m=" + std::to_string(m) + " outside [1, " +
                       std::to_string(x.features()) + "]");
  }
  return evaluate_columns(x.columns(ranking.top(m)), truth, c, runs, seed);
}

SweepReport sweep(const DataMatrix& x, const LabelVector& truth, std::span<const double> alphas,
                  std::span<const double> lambdas, std::span<const int> feature_counts,
                  const Hyperparameters& base, const SweepOptions& options) {
  if (alphas.empty() || lambdas.empty()) throw InvalidInput("parameter grids must be non-empty");
  if (feature_counts.empty()) throw InvalidInput("feature counts must be non-empty");
  for (const int m : feature_counts) {
    if (m < 1 || m > x.features()) {
      throw InvalidInput("feature count " + std::to_string(m) + " outside [1, " +
                         std::to_string(x.features()) + "]");
    }
  }
  if (truth.size() != static_cast<std::size_t>(x.samples())) {
    throw InvalidInput("label count does not match sample count");
  }
  base.validate(x.samples(), x.features());

  SweepReport report;
  report.feature_counts.assign(feature_counts.begin(), feature_counts.end());
  report.runs_per_cell = options.runs;
  report.seed = base.seed;
  for (const double a : alphas) {
    for (const double l : lambdas) {
      SweepCell cell;
      cell.alpha = a;
      cell.lambda = l;
      report.cells.push_back(std::move(cell));
    }
  }

  // Graph construction does not depend on (alpha, lambda); build it once.
  const GraphFilter filter = heat_kernel_filter(
      normalized_laplacian(build_knn_graph(x, base.neighbors, median_bandwidth(x))).laplacian,
      base.eta);
  const Matrix xbar = smooth(filter, x);

  auto run_cell = [&](SweepCell& cell) {
    try {
      Hyperparameters params = base;
      params.alpha = cell.alpha;
      params.lambda = cell.lambda;
      const FitResult fitted = fit_smoothed(xbar, filter.kernel, params);
      const FeatureRanking ranking = rank_features(fitted.w);
      cell.iterations = fitted.iterations;
      cell.converged = fitted.converged;
      cell.ranking = ranking.order;
      std::vector<ClusteringMetrics> means;
      for (const int m : feature_counts) {
        cell.per_m.push_back(
            evaluate_selection(x, ranking, m, truth, params.clusters, options.runs, params.seed));
        means.push_back(cell.per_m.back().mean);
      }
      cell.mean_over_m = mean_of(means);
    } catch (const std::exception& e) {
      cell.failed = true;
      cell.error = e.what();
      cell.per_m.clear();
    }
  };

  const std::size_t workers =
      std::clamp<std::size_t>(static_cast<std::size_t>(std::max(options.workers, 1)), 1,
                              report.cells.size());
  if (workers == 1) {
    for (auto& cell : report.cells) run_cell(cell);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < report.cells.size(); i = next++) run_cell(report.cells[i]);
      });
    }
    for (auto& t : pool) t.join();
  }

  for (std::size_t i = 0; i < report.cells.size(); ++i) {
    const SweepCell& cell = report.cells[i];
    if (cell.failed) continue;
    if (!report.best_cell || cell.mean_over_m.acc > report.cells[*report.best_cell].mean_over_m.acc) {
      report.best_cell = i;
    }
  }
  return report;
}

}  // namespace gfsel
