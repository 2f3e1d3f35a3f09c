#include "gfsel/dataset.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <unordered_map>

#include "gfsel/errors.hpp"

namespace gfsel {

namespace {

struct Line {
  std::size_t number;  // 1-based physical line
  std::vector<std::string> cells;
};

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return std::string(s.substr(first, last - first + 1));
}

std::vector<std::string> split(const std::string& text) {
  std::vector<std::string> cells;
  std::size_t start = 0;
  for (;;) {
    const auto comma = text.find(',', start);
    cells.push_back(trim(std::string_view(text).substr(start, comma - start)));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return cells;
}

std::vector<Line> read_lines(std::istream& in) {
  std::vector<Line> lines;
  std::string text;
  std::size_t number = 0;
  while (std::getline(in, text)) {
    ++number;
    if (number == 1 && text.rfind("\xEF\xBB\xBF", 0) == 0) text.erase(0, 3);
    if (trim(text).empty()) continue;
    lines.push_back({number, split(text)});
  }
  return lines;
}

std::optional<double> parse_number(const std::string& cell) {
  if (cell.empty()) return std::nullopt;
  const char* first = cell.data();
  const char* last = first + cell.size();
  if (*first == '+') ++first;
  double value = 0.0;
  const auto [end, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || end != last) return std::nullopt;
  return value;
}

std::optional<std::size_t> find_label_column(const LabelSpec& spec, const Line& first,
                                             bool& header_required) {
  header_required = false;
  if (!spec.column) return std::nullopt;
  if (*spec.column == "last") return first.cells.size() - 1;
  header_required = true;
  for (std::size_t j = 0; j < first.cells.size(); ++j) {
    if (first.cells[j] == *spec.column) return j;
  }
  throw ParseError("label column '" + *spec.column + "' not found in header", first.number, 0);
}

}  // namespace

LabelVector encode_labels(const std::vector<std::string>& raw, std::vector<std::string>* names) {
  std::unordered_map<std::string, int> ids;
  std::vector<std::string> order;
  std::vector<int> encoded;
  encoded.reserve(raw.size());
  for (const auto& label : raw) {
    const auto [it, inserted] = ids.emplace(label, static_cast<int>(order.size()));
    if (inserted) order.push_back(label);
    encoded.push_back(it->second);
  }
  const int classes = static_cast<int>(order.size());
  if (names) *names = std::move(order);
  return LabelVector(std::move(encoded), classes);
}

Dataset parse_dataset(std::istream& data, const LabelSpec& spec, std::istream* labels) {
  if (spec.path && spec.column) {
    throw InvalidInput("labels come from either a separate file or a column, not both");
  }
  const std::vector<Line> lines = read_lines(data);
  if (lines.empty()) throw ParseError("data file is empty", 0, 0);

  bool header_required = false;
  const auto label_col = find_label_column(spec, lines.front(), header_required);

  bool has_header = header_required;
  if (!has_header) {
    const auto& first = lines.front().cells;
    for (std::size_t j = 0; j < first.size(); ++j) {
      if (label_col && j == *label_col) continue;
      if (!parse_number(first[j])) {
        has_header = true;
        break;
      }
    }
  }

  const std::size_t width = lines.front().cells.size();
  const std::size_t features = width - (label_col ? 1 : 0);
  if (features == 0) throw ParseError("no feature columns", lines.front().number, 0);

  Dataset out{DataMatrix(Matrix::Zero(2, 1)), std::nullopt, {}, {}};
  if (has_header) {
    for (std::size_t j = 0; j < width; ++j) {
      if (!label_col || j != *label_col) out.feature_names.push_back(lines.front().cells[j]);
    }
  }

  const std::size_t first_row = has_header ? 1 : 0;
  const std::size_t samples = lines.size() - first_row;
  if (samples < 2) {
    throw ParseError("need at least 2 samples, found " + std::to_string(samples), 0, 0);
  }

  Matrix values(static_cast<Index>(samples), static_cast<Index>(features));
  std::vector<std::string> raw_labels;
  for (std::size_t r = first_row; r < lines.size(); ++r) {
    const Line& line = lines[r];
    if (line.cells.size() != width) {
      throw ParseError("expected " + std::to_string(width) + " cells, found " +
                           std::to_string(line.cells.size()),
                       line.number, 0);
    }
    Index col = 0;
    for (std::size_t j = 0; j < width; ++j) {
      if (label_col && j == *label_col) {
        raw_labels.push_back(line.cells[j]);
        continue;
      }
      const auto value = parse_number(line.cells[j]);
      if (!value) {
        throw ParseError("non-numeric cell '" + line.cells[j] + "'", line.number, j + 1);
      }
      if (!std::isfinite(*value)) throw ParseError("non-finite value", line.number, j + 1);
      values(static_cast<Index>(r - first_row), col++) = *value;
    }
  }
  out.x = DataMatrix(std::move(values));

  if (label_col) {
    out.labels = encode_labels(raw_labels, &out.label_names);
  } else if (spec.path) {
    if (!labels) throw InvalidInput("label stream missing");
    std::vector<Line> label_lines = read_lines(*labels);
    if (label_lines.size() == samples + 1) label_lines.erase(label_lines.begin());
    if (label_lines.size() != samples) {
      throw ParseError("label file has " + std::to_string(label_lines.size()) +
                           " entries for " + std::to_string(samples) + " samples",
                       0, 0);
    }
    for (const Line& line : label_lines) {
      if (line.cells.size() != 1) {
        throw ParseError("label file must have a single column", line.number, 0);
      }
      raw_labels.push_back(line.cells.front());
    }
    out.labels = encode_labels(raw_labels, &out.label_names);
  }
  return out;
}

Dataset load_dataset(const std::string& path, const LabelSpec& spec) {
  std::ifstream data(path);
  if (!data) throw ParseError("cannot open data file '" + path + "'", 0, 0);
  if (spec.path) {
    std::ifstream labels(*spec.path);
    if (!labels) throw ParseError("cannot open label file '" + *spec.path + "'", 0, 0);
    return parse_dataset(data, spec, &labels);
  }
  return parse_dataset(data, spec);
}

}  // namespace gfsel
