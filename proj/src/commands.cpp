#include "gfsel/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <thread>

#include "gfsel/dataset.hpp"
#include "gfsel/errors.hpp"
#include "gfsel/eval.hpp"
#include "gfsel/graph_filter.hpp"
#include "gfsel/solver.hpp"

namespace gfsel {

using nlohmann::json;

namespace {

constexpr double kGridSlack = 1e-9;
constexpr int kDefaultTop = 10;

std::vector<std::string> split_on(const std::string& s, char sep) {
  std::vector<std::string> parts;
  std::stringstream in(s);
  std::string part;
  while (std::getline(in, part, sep)) parts.push_back(part);
  if (!s.empty() && s.back() == sep) parts.emplace_back();
  return parts;
}

double to_double(const std::string& text, const std::string& spec) {
  double value = 0.0;
  const char* first = text.data();
  const char* last = first + text.size();
  if (first != last && *first == '+') ++first;
  const auto [end, ec] = std::from_chars(first, last, value);
  if (text.empty() || ec != std::errc() || end != last || !std::isfinite(value)) {
    throw InvalidInput("malformed number '" + text + "' in '" + spec + "'");
  }
  return value;
}

int to_int(const std::string& text, const std::string& spec) {
  int value = 0;
  const auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (text.empty() || ec != std::errc() || end != text.data() + text.size()) {
    throw InvalidInput("malformed integer '" + text + "' in '" + spec + "'");
  }
  return value;
}

double round_significant(double v) {
  char buf[32];
  const auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 15);
  double out = v;
  std::from_chars(buf, end, out);
  return out;
}

std::string format_double(double v) {
  char buf[32];
  const auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 17);
  return ec == std::errc() ? std::string(buf, end) : std::string("nan");
}

std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  std::ostringstream out;
  out << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return out.str();
}

json metrics_json(const ClusteringMetrics& m) {
  return {{"acc", m.acc}, {"nmi", m.nmi}, {"purity", m.purity}};
}

json evaluation_json(const SelectionEvaluation& e) {
  json runs = json::array();
  for (const auto& r : e.runs) runs.push_back(metrics_json(r));
  return {{"mean", metrics_json(e.mean)}, {"runs", runs}};
}

// Writes `text` to `path`, or to `out` when the path is empty or "-".
void emit(const std::string& path, const std::string& text, std::ostream& out) {
  if (path.empty() || path == "-") {
    out << text;
    return;
  }
  std::ofstream file(path, std::ios::binary);
  if (!file) throw InvalidInput("cannot write '" + path + "'");
  file << text;
  if (!file) throw InvalidInput("failed writing '" + path + "'");
}

struct Loaded {
  Dataset data;
  RunConfig config;  // with clusters and top resolved
};

Loaded load(const RunConfig& config) {
  if (config.input_path.empty()) throw InvalidInput("--input is required");
  if (config.label_path && config.label_column) {
    throw InvalidInput("use either --labels or --label-column, not both");
  }
  Loaded loaded{load_dataset(config.input_path, {config.label_path, config.label_column}), config};
  const Index d = loaded.data.x.features();
  if (!loaded.config.clusters) {
    if (!loaded.data.labels) {
      throw InvalidInput("--clusters is required when no labels are given");
    }
    loaded.config.clusters = loaded.data.labels->num_classes();
  }
  if (!loaded.config.top) loaded.config.top = static_cast<int>(std::min<Index>(kDefaultTop, d));
  if (*loaded.config.top < 1 || *loaded.config.top > d) {
    throw InvalidInput("--top " + std::to_string(*loaded.config.top) + " outside [1, " +
                       std::to_string(d) + "]");
  }
  return loaded;
}

Hyperparameters hyperparameters(const RunConfig& config) {
  Hyperparameters p;
  p.alpha = config.alpha;
  p.lambda = config.lambda;
  p.clusters = config.clusters.value_or(0);
  p.neighbors = config.k;
  p.eta = config.eta;
  p.max_outer_iters = config.max_outer_iters;
  p.outer_tol = config.outer_tol;
  p.seed = config.seed;
  p.admm.max_inner = config.max_inner;
  p.admm.inner_tol = config.inner_tol;
  return p;
}

json dataset_json(const Dataset& data) {
  json j = {{"samples", data.x.samples()},
            {"features", data.x.features()},
            {"has_labels", data.labels.has_value()}};
  if (!data.feature_names.empty()) j["feature_names"] = data.feature_names;
  if (data.labels) {
    j["classes"] = data.labels->num_classes();
    j["label_names"] = data.label_names;
  }
  return j;
}

json envelope(const char* command, const Loaded& loaded) {
  return {{"command", command},
          {"config", config_to_json(loaded.config)},
          {"dataset", dataset_json(loaded.data)}};
}

void stamp(json& report, std::chrono::steady_clock::time_point start) {
  report["run_info"] = {
      {"generated_at", utc_timestamp()},
      {"wall_seconds",
       std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count()}};
}

int worker_count(int requested) {
  if (requested > 0) return requested;
  return static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
}

template <typename T>
void read_key(const json& j, const char* key, T& field) {
  if (j.contains(key)) field = j.at(key).get<T>();
}

template <typename T>
void read_optional(const json& j, const char* key, std::optional<T>& field) {
  if (!j.contains(key)) return;
  if (j.at(key).is_null()) {
    field.reset();
  } else {
    field = j.at(key).get<T>();
  }
}

template <typename T>
json optional_json(const std::optional<T>& v) {
  return v ? json(*v) : json(nullptr);
}

}  // namespace

std::vector<double> parse_grid(const std::string& spec) {
  const auto parts = split_on(spec, ':');
  std::vector<double> values;
  if (parts.size() == 3) {
    const double lo = to_double(parts[0], spec);
    const double hi = to_double(parts[2], spec);
    if (hi < lo) throw InvalidInput("grid '" + spec + "' has upper end below lower end");
    const bool geometric = !parts[1].empty() && parts[1].back() == 'x';
    if (geometric) {
      const double ratio = to_double(parts[1].substr(0, parts[1].size() - 1), spec);
      if (!(lo > 0.0) || !(ratio > 1.0)) {
        throw InvalidInput("geometric grid '" + spec + "' needs lo > 0 and ratio > 1");
      }
      // Rounded to 15 significant digits so that decade grids land on the
      // decimal values the user wrote (1e-3 * 10^6 is not exactly 1000).
      for (int i = 0;; ++i) {
        const double v = round_significant(lo * std::pow(ratio, i));
        if (v > hi * (1.0 + kGridSlack)) break;
        values.push_back(v);
      }
    } else {
      const double step = to_double(parts[1], spec);
      if (!(step > 0.0)) throw InvalidInput("grid '" + spec + "' needs a positive step");
      for (int i = 0;; ++i) {
        const double v = lo + step * i;
        if (v > hi + kGridSlack * std::max(1.0, std::abs(hi))) break;
        values.push_back(v);
      }
    }
  } else if (parts.size() == 1) {
    for (const auto& item : split_on(spec, ',')) values.push_back(to_double(item, spec));
  } else {
    throw InvalidInput("grid spec '" + spec + "' is not lo:STEPx:hi, lo:step:hi or a list");
  }
  if (values.empty()) throw InvalidInput("grid spec '" + spec + "' is empty");
  return values;
}

std::vector<int> parse_feature_counts(const std::string& spec) {
  const auto parts = split_on(spec, ':');
  std::vector<int> counts;
  if (parts.size() == 3) {
    const int start = to_int(parts[0], spec);
    const int step = to_int(parts[1], spec);
    const int stop = to_int(parts[2], spec);
    if (step <= 0 || stop < start) {
      throw InvalidInput("feature counts '" + spec + "' need step > 0 and stop >= start");
    }
    for (int m = start; m <= stop; m += step) counts.push_back(m);
  } else if (parts.size() == 1) {
    for (const auto& item : split_on(spec, ',')) counts.push_back(to_int(item, spec));
  } else {
    throw InvalidInput("feature count spec '" + spec + "' is not start:step:stop or a list");
  }
  for (const int m : counts) {
    if (m < 1) throw InvalidInput("feature counts must be positive in '" + spec + "'");
  }
  return counts;
}

json config_to_json(const RunConfig& c) {
  return {{"input", c.input_path},
          {"labels", optional_json(c.label_path)},
          {"label_column", optional_json(c.label_column)},
          {"k", c.k},
          {"eta", c.eta},
          {"alpha", c.alpha},
          {"lambda", c.lambda},
          {"clusters", optional_json(c.clusters)},
          {"top", optional_json(c.top)},
          {"features", c.features},
          {"grid", c.grid},
          {"seed", c.seed},
          {"output", c.output_path},
          {"tol", c.outer_tol},
          {"max_iters", c.max_outer_iters},
          {"max_inner", c.max_inner},
          {"inner_tol", c.inner_tol},
          {"runs", c.runs},
          {"workers", c.workers}};
}

RunConfig config_from_json(const json& j) {
  if (!j.is_object()) throw InvalidInput("configuration must be a JSON object");
  static const std::vector<std::string> known = {
      "input", "labels", "label_column", "k",         "eta",       "alpha", "lambda",
      "clusters", "top", "features",     "grid",      "seed",      "output", "tol",
      "max_iters", "max_inner", "inner_tol", "runs", "workers"};
  for (const auto& item : j.items()) {
    if (std::find(known.begin(), known.end(), item.key()) == known.end()) {
      throw InvalidInput("unknown configuration key '" + item.key() + "'");
    }
  }
  RunConfig c;
  try {
    read_key(j, "input", c.input_path);
    read_optional(j, "labels", c.label_path);
    read_optional(j, "label_column", c.label_column);
    read_key(j, "k", c.k);
    read_key(j, "eta", c.eta);
    read_key(j, "alpha", c.alpha);
    read_key(j, "lambda", c.lambda);
    read_optional(j, "clusters", c.clusters);
    read_optional(j, "top", c.top);
    read_key(j, "features", c.features);
    read_key(j, "grid", c.grid);
    read_key(j, "seed", c.seed);
    read_key(j, "output", c.output_path);
    read_key(j, "tol", c.outer_tol);
    read_key(j, "max_iters", c.max_outer_iters);
    read_key(j, "max_inner", c.max_inner);
    read_key(j, "inner_tol", c.inner_tol);
    read_key(j, "runs", c.runs);
    read_key(j, "workers", c.workers);
  } catch (const json::exception& e) {
    throw InvalidInput(std::string("bad configuration value: ") + e.what());
  }
  return c;
}

std::string sibling_path(const std::string& path, const std::string& extension) {
  const auto slash = path.find_last_of('/');
  const auto dot = path.find_last_of('.');
  if (dot != std::string::npos && (slash == std::string::npos || dot > slash)) {
    return path.substr(0, dot) + extension;
  }
  return path + extension;
}

int cmd_select(const RunConfig& config, std::ostream& out) {
  const auto start = std::chrono::steady_clock::now();
  const Loaded loaded = load(config);
  if (config.runs < 1) throw InvalidInput("--runs must be positive");
  const Hyperparameters params = hyperparameters(loaded.config);
  params.validate(loaded.data.x.samples(), loaded.data.x.features());

  const FitResult fitted = fit(loaded.data.x, params);
  const FeatureRanking ranking = rank_features(fitted.w);
  const Index m = *loaded.config.top;

  json scores = json::array();
  for (const Index f : ranking.order) scores.push_back(ranking.scores(f));
  json result = {{"selected", ranking.top(m)},
                 {"ranking", ranking.order},
                 {"scores", scores},
                 {"objective_history", fitted.objective_history},
                 {"iterations", fitted.iterations},
                 {"converged", fitted.converged},
                 {"bandwidth", fitted.bandwidth},
                 {"inner_iterations", fitted.inner_iterations},
                 {"inner_fallbacks", fitted.inner_fallbacks}};

  json report = envelope("select", loaded);
  report["result"] = std::move(result);
  if (loaded.data.labels) {
    const int c = *loaded.config.clusters;
    report["evaluation"] = {
        {"selected", evaluation_json(evaluate_selection(loaded.data.x, ranking, m,
                                                        *loaded.data.labels, c, config.runs,
                                                        config.seed))},
        {"all_features", evaluation_json(evaluate_columns(loaded.data.x.values(),
                                                          *loaded.data.labels, c, config.runs,
                                                          config.seed))}};
  }
  stamp(report, start);
  emit(config.output_path, report.dump(2) + "\n", out);
  return kExitOk;
}

int cmd_sweep(const RunConfig& config, std::ostream& out) {
  const auto start = std::chrono::steady_clock::now();
  if (config.output_path.empty() || config.output_path == "-") {
    throw InvalidInput("sweep needs --output; the table is written next to the report");
  }
  const Loaded loaded = load(config);
  if (!loaded.data.labels) {
    throw InvalidInput(
        "sweep needs labels (--labels or --label-column); use 'select' for unlabeled data");
  }
  if (config.runs < 1) throw InvalidInput("--runs must be positive");
  const std::vector<double> grid = parse_grid(config.grid);
  const std::vector<int> counts = parse_feature_counts(config.features);
  const Hyperparameters params = hyperparameters(loaded.config);

  SweepOptions options;
  options.runs = config.runs;
  options.workers = worker_count(config.workers);
  const LabelVector& truth = *loaded.data.labels;
  const SweepReport sweep_report =
      sweep(loaded.data.x, truth, grid, grid, counts, params, options);

  json cells = json::array();
  std::ostringstream table;
  table << "alpha,lambda,m,status,acc,nmi,purity\n";
  for (const SweepCell& cell : sweep_report.cells) {
    json j = {{"alpha", cell.alpha}, {"lambda", cell.lambda}, {"failed", cell.failed}};
    if (cell.failed) {
      j["error"] = cell.error;
      for (const int m : counts) {
        table << format_double(cell.alpha) << ',' << format_double(cell.lambda) << ',' << m
              << ",failed,,,\n";
      }
    } else {
      j["iterations"] = cell.iterations;
      j["converged"] = cell.converged;
      j["mean"] = metrics_json(cell.mean_over_m);
      const auto widest = static_cast<std::size_t>(*std::max_element(counts.begin(), counts.end()));
      j["ranking"] = std::vector<Index>(cell.ranking.begin(), cell.ranking.begin() + widest);
      json per_m = json::array();
      for (std::size_t t = 0; t < counts.size(); ++t) {
        json entry = evaluation_json(cell.per_m[t]);
        entry["m"] = counts[t];
        per_m.push_back(std::move(entry));
        const ClusteringMetrics& mean = cell.per_m[t].mean;
        table << format_double(cell.alpha) << ',' << format_double(cell.lambda) << ','
              << counts[t] << ",ok," << format_double(mean.acc) << ','
              << format_double(mean.nmi) << ',' << format_double(mean.purity) << '\n';
      }
      j["per_m"] = std::move(per_m);
    }
    cells.push_back(std::move(j));
  }

  std::vector<std::uint64_t> seeds;
  for (int r = 0; r < config.runs; ++r) seeds.push_back(config.seed + static_cast<std::uint64_t>(r));
  const std::string table_path = sibling_path(config.output_path, ".csv");
  json result = {{"alphas", grid},
                 {"lambdas", grid},
                 {"feature_counts", counts},
                 {"runs_per_cell", sweep_report.runs_per_cell},
                 {"seeds", seeds},
                 {"cells", std::move(cells)},
                 {"table", table_path}};
  if (sweep_report.best_cell) {
    const SweepCell& best = sweep_report.cells[*sweep_report.best_cell];
    result["best_cell"] = {{"index", *sweep_report.best_cell},
                           {"alpha", best.alpha},
                           {"lambda", best.lambda},
                           {"mean", metrics_json(best.mean_over_m)}};
  } else {
    result["best_cell"] = nullptr;
  }
  result["all_features"] = evaluation_json(
      evaluate_columns(loaded.data.x.values(), truth, *loaded.config.clusters, config.runs,
                       config.seed));

  json report = envelope("sweep", loaded);
  report["result"] = std::move(result);
  stamp(report, start);
  emit(table_path, table.str(), out);
  emit(config.output_path, report.dump(2) + "\n", out);
  return kExitOk;
}

int cmd_filter(const RunConfig& config, std::ostream& out) {
  const auto start = std::chrono::steady_clock::now();
  if (config.output_path.empty() || config.output_path == "-") {
    throw InvalidInput("filter needs --output; diagnostics are written next to it");
  }
  if (config.input_path.empty()) throw InvalidInput("--input is required");
  const Dataset data = load_dataset(config.input_path, {config.label_path, config.label_column});
  const Index n = data.x.samples();
  if (config.k < 1 || config.k > n - 1) {
    throw InvalidInput("neighbor count k=" + std::to_string(config.k) + " outside [1, " +
                       std::to_string(n - 1) + "]");
  }
  if (!(config.eta >= 0.0) || !std::isfinite(config.eta)) throw InvalidInput("eta must be >= 0");

  const double bandwidth = median_bandwidth(data.x);
  const SimilarityGraph graph = build_knn_graph(data.x, config.k, bandwidth);
  const Laplacian lap = normalized_laplacian(graph);
  const GraphFilter filter = heat_kernel_filter(lap.laplacian, config.eta);
  const Matrix xbar = smooth(filter, data.x);

  std::ostringstream csv;
  if (!data.feature_names.empty()) {
    for (std::size_t j = 0; j < data.feature_names.size(); ++j) {
      csv << (j ? "," : "") << data.feature_names[j];
    }
    csv << '\n';
  }
  for (Index i = 0; i < xbar.rows(); ++i) {
    for (Index j = 0; j < xbar.cols(); ++j) csv << (j ? "," : "") << format_double(xbar(i, j));
    csv << '\n';
  }

  Index edges = 0;
  for (Index i = 0; i < n; ++i) {
    for (Index j = i + 1; j < n; ++j) edges += graph.weights(i, j) > 0.0 ? 1 : 0;
  }
  const Eigen::Map<const Vector> spectrum(filter.eigenvalues.data(), filter.eigenvalues.size());
  json report = {{"command", "filter"},
                 {"config", config_to_json(config)},
                 {"dataset", dataset_json(data)},
                 {"result",
                  {{"bandwidth", bandwidth},
                   {"neighbors", config.k},
                   {"eta", config.eta},
                   {"edges", edges},
                   {"laplacian_min_eigenvalue", spectrum.minCoeff()},
                   {"laplacian_max_eigenvalue", spectrum.maxCoeff()},
                   {"filter_min_response", std::exp(-config.eta * spectrum.maxCoeff())},
                   {"filter_max_response", std::exp(-config.eta * spectrum.minCoeff())},
                   {"smoothed", config.output_path}}}};
  stamp(report, start);
  emit(config.output_path, csv.str(), out);
  emit(sibling_path(config.output_path, ".json"), report.dump(2) + "\n", out);
  return kExitOk;
}

namespace {

json error_record(const char* kind, const std::string& message) {
  return {{"error", {{"kind", kind}, {"message", message}}}};
}

// Command-line values, kept apart from RunConfig so that explicit flags can
// be told from defaults when a --config file is layered underneath.
struct Flags {
  std::string config_path;
  RunConfig values;
};

void add_run_options(CLI::App& cmd, Flags& f) {
  RunConfig& v = f.values;
  cmd.add_option("--config", f.config_path, "JSON configuration or a previous report");
  cmd.add_option("--input", v.input_path, "CSV data file");
  cmd.add_option("--labels", v.label_path, "label file, one label per line");
  cmd.add_option("--label-column", v.label_column, "label column: header name or 'last'");
  cmd.add_option("--k", v.k, "neighbors in the kNN graph");
  cmd.add_option("--eta", v.eta, "heat-kernel filter strength");
  cmd.add_option("--alpha", v.alpha, "weight of the graph-filter prior on Z");
  cmd.add_option("--lambda", v.lambda, "row-sparsity weight on W");
  cmd.add_option("--clusters", v.clusters, "projection dimension and k-means cluster count");
  cmd.add_option("--top", v.top, "number of features to select");
  cmd.add_option("--features", v.features, "feature counts for sweep, start:step:stop");
  cmd.add_option("--grid", v.grid, "alpha and lambda grid, lo:STEPx:hi");
  cmd.add_option("--seed", v.seed, "random seed");
  cmd.add_option("--tol", v.outer_tol, "relative objective change that stops the fit");
  cmd.add_option("--max-iters", v.max_outer_iters, "outer iteration cap");
  cmd.add_option("--max-inner", v.max_inner, "inner ADMM iteration cap");
  cmd.add_option("--inner-tol", v.inner_tol, "inner ADMM residual tolerance");
  cmd.add_option("--runs", v.runs, "k-means repetitions per evaluation");
  cmd.add_option("--workers", v.workers, "sweep worker threads (0 = all processors)");
  cmd.add_option("--output", v.output_path, "report path ('-' for stdout)");
}

// Layers: defaults < --config file < explicit flags < GFSEL_SEED.
RunConfig resolve(const CLI::App& cmd, const Flags& f) {
  RunConfig c;
  if (!f.config_path.empty()) {
    std::ifstream in(f.config_path);
    if (!in) throw InvalidInput("cannot open configuration '" + f.config_path + "'");
    json j;
    try {
      j = json::parse(in);
    } catch (const json::exception& e) {
      throw InvalidInput("configuration '" + f.config_path + "' is not valid JSON: " + e.what());
    }
    c = config_from_json(j.is_object() && j.contains("config") ? j.at("config") : j);
  }
  const RunConfig& v = f.values;
  auto given = [&](const char* name) { return cmd.count(name) > 0; };
  if (given("--input")) c.input_path = v.input_path;
  if (given("--labels")) c.label_path = v.label_path;
  if (given("--label-column")) c.label_column = v.label_column;
  if (given("--k")) c.k = v.k;
  if (given("--eta")) c.eta = v.eta;
  if (given("--alpha")) c.alpha = v.alpha;
  if (given("--lambda")) c.lambda = v.lambda;
  if (given("--clusters")) c.clusters = v.clusters;
  if (given("--top")) c.top = v.top;
  if (given("--features")) c.features = v.features;
  if (given("--grid")) c.grid = v.grid;
  if (given("--seed")) c.seed = v.seed;
  if (given("--tol")) c.outer_tol = v.outer_tol;
  if (given("--max-iters")) c.max_outer_iters = v.max_outer_iters;
  if (given("--max-inner")) c.max_inner = v.max_inner;
  if (given("--inner-tol")) c.inner_tol = v.inner_tol;
  if (given("--runs")) c.runs = v.runs;
  if (given("--workers")) c.workers = v.workers;
  if (given("--output")) c.output_path = v.output_path;

  if (const char* env = std::getenv("GFSEL_SEED"); env && *env) {
    const std::string text(env);
    std::uint64_t seed = 0;
    const auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), seed);
    if (ec != std::errc() || end != text.data() + text.size()) {
      throw InvalidInput("GFSEL_SEED='" + text + "' is not an unsigned integer");
    }
    c.seed = seed;
  }
  return c;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Graph-filtered self-representation unsupervised feature selection", "gfsel"};
  app.require_subcommand(1);
  Flags select_flags;
  Flags sweep_flags;
  Flags filter_flags;
  CLI::App* select = app.add_subcommand("select", "fit once and rank features");
  CLI::App* sweep_cmd = app.add_subcommand("sweep", "grid search over alpha and lambda");
  CLI::App* filter = app.add_subcommand("filter", "write the graph-smoothed data");
  add_run_options(*select, select_flags);
  add_run_options(*sweep_cmd, sweep_flags);
  add_run_options(*filter, filter_flags);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << error_record("usage", e.what()).dump() << '\n';
    return kExitConfig;
  }

  try {
    if (select->parsed()) return cmd_select(resolve(*select, select_flags), out);
    if (sweep_cmd->parsed()) return cmd_sweep(resolve(*sweep_cmd, sweep_flags), out);
    return cmd_filter(resolve(*filter, filter_flags), out);
  } catch (const ParseError& e) {
    json record = error_record("parse_error", e.what());
    record["error"]["row"] = e.row();
    record["error"]["column"] = e.column();
    err << record.dump() << '\n';
    return kExitConfig;
  } catch (const InvalidInput& e) {
    err << error_record("invalid_input", e.what()).dump() << '\n';
    return kExitConfig;
  } catch (const NumericalFailure& e) {
    json record = error_record("numerical_failure", e.what());
    record["error"]["iteration"] = e.iteration();
    err << record.dump() << '\n';
    return kExitNumerical;
  } catch (const std::exception& e) {
    err << error_record("internal", e.what()).dump() << '\n';
    return kExitInternal;
  }
}

}  // namespace gfsel
