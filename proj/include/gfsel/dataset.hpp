#pragma once

// CSV ingestion. One row per sample, comma separated, '.' decimal point,
// LF or CRLF line ends. A first row with a non-numeric feature cell is
// taken as a header. Blank lines are ignored.

#include <istream>
#include <optional>
#include <string>
#include <vector>

#include "gfsel/eval.hpp"
#include "gfsel/graph_filter.hpp"

namespace gfsel {

/// Where the labels come from, if anywhere. At most one field is set.
struct LabelSpec {
  /// Separate file with one label per line. A line count of n + 1 means
  /// the first line is a header.
  std::optional<std::string> path;
  /// Column inside the data file, by header name or the word "last".
  std::optional<std::string> column;
};

struct Dataset {
  DataMatrix x;
  std::optional<LabelVector> labels;
  /// Header names of the feature columns; empty when the file has no header.
  std::vector<std::string> feature_names;
  /// Original label text per encoded id, in first-appearance order.
  std::vector<std::string> label_names;
};

/// Re-encodes label strings to 0..K-1 in order of first appearance.
LabelVector encode_labels(const std::vector<std::string>& raw, std::vector<std::string>* names = nullptr);

/// Parses a dataset from streams. `labels` is read only when the spec
/// names a separate label source.
Dataset parse_dataset(std::istream& data, const LabelSpec& spec, std::istream* labels = nullptr);

/// Opens the files and calls parse_dataset.
Dataset load_dataset(const std::string& path, const LabelSpec& spec = {});

}  // namespace gfsel
