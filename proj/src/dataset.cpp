#include "hdkit/apps/dataset.hpp"

#include <charconv>
#include <cmath>
#include <fstream>

namespace hdkit::apps {

CsvFormat csv_format_from_string(std::string_view s) {
  if (s == "csv_label_first" || s == "csv") return CsvFormat::LabelFirst;
  if (s == "isolet") return CsvFormat::Isolet;
  throw Error("unknown dataset format '" + std::string(s) + "' (csv_label_first, isolet)");
}

namespace {

double parse_cell(const std::string& tok, int line, int col) {
  const char* b = tok.data();
  const char* e = b + tok.size();
  while (b < e && (*b == ' ' || *b == '\t')) ++b;
  while (e > b && (*(e - 1) == ' ' || *(e - 1) == '\t' || *(e - 1) == '\r')) --e;
  if (b == e)
    throw Error("line " + std::to_string(line) + ", column " + std::to_string(col) +
                ": empty cell");
  double v = 0;
  auto [p, ec] = std::from_chars(b, e, v);
  // UCI isolet writes labels like "1."; from_chars handles that, but be
  // explicit about anything left over
  if (ec != std::errc{} || p != e)
    throw Error("line " + std::to_string(line) + ", column " + std::to_string(col) +
                ": non-numeric token '" + std::string(b, e) + "'");
  return v;
}

}  // namespace

Dataset load_dataset(const std::string& path, CsvFormat format, bool skip_header,
                     bool normalize) {
  std::ifstream f(path);
  if (!f) throw Error("cannot open dataset '" + path + "'");

  std::vector<std::vector<double>> rows;
  std::vector<std::int64_t> labels;
  std::string line;
  int line_no = 0;
  std::size_t width = 0;
  while (std::getline(f, line)) {
    ++line_no;
    if (line_no == 1 && skip_header) continue;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;

    std::vector<std::string> cells;
    std::size_t start = 0;
    while (true) {
      std::size_t comma = line.find(',', start);
      cells.push_back(line.substr(start, comma - start));
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
    if (cells.size() < 2)
      throw Error("line " + std::to_string(line_no) + ": expected label and features");
    if (width == 0) width = cells.size();
    if (cells.size() != width)
      throw Error("line " + std::to_string(line_no) + ": expected " + std::to_string(width) +
                  " columns, found " + std::to_string(cells.size()));

    std::vector<double> feats;
    feats.reserve(cells.size() - 1);
    double label_cell;
    if (format == CsvFormat::LabelFirst) {
      label_cell = parse_cell(cells[0], line_no, 1);
      for (std::size_t c = 1; c < cells.size(); ++c)
        feats.push_back(parse_cell(cells[c], line_no, static_cast<int>(c + 1)));
    } else {
      for (std::size_t c = 0; c + 1 < cells.size(); ++c)
        feats.push_back(parse_cell(cells[c], line_no, static_cast<int>(c + 1)));
      label_cell = parse_cell(cells.back(), line_no, static_cast<int>(cells.size()));
      label_cell -= 1.0;  // isolet labels are 1-based
    }
    double rounded = std::round(label_cell);
    if (rounded != label_cell || rounded < 0)
      throw Error("line " + std::to_string(line_no) + ": label '" +
                  std::to_string(label_cell) + "' is not a non-negative integer");
    labels.push_back(static_cast<std::int64_t>(rounded));
    rows.push_back(std::move(feats));
  }
  if (rows.empty()) throw Error("dataset '" + path + "' has no rows");

  Dataset ds = dataset_from_rows(rows, labels);
  if (normalize) zscore_columns(ds.features);
  return ds;
}

Dataset dataset_from_rows(const std::vector<std::vector<double>>& rows,
                          const std::vector<std::int64_t>& labels) {
  if (rows.empty()) throw Error("empty dataset");
  std::int64_t n = static_cast<std::int64_t>(rows.size());
  std::int64_t f = static_cast<std::int64_t>(rows[0].size());
  Dataset ds;
  ds.features = Hypermatrix(ElementType::F32, n, f);
  for (std::int64_t r = 0; r < n; ++r) {
    if (static_cast<std::int64_t>(rows[static_cast<std::size_t>(r)].size()) != f)
      throw Error("row " + std::to_string(r) + ": inconsistent feature count");
    for (std::int64_t c = 0; c < f; ++c)
      ds.features.set_from_double(r, c, rows[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)]);
  }
  ds.labels = labels;
  for (std::int64_t l : labels) ds.class_count = std::max(ds.class_count, l + 1);
  return ds;
}

void zscore_columns(Hypermatrix& features) {
  std::int64_t n = features.rows(), f = features.dim();
  for (std::int64_t c = 0; c < f; ++c) {
    double sum = 0, sumsq = 0;
    for (std::int64_t r = 0; r < n; ++r) {
      double v = features.get_as_double(r, c);
      sum += v;
      sumsq += v * v;
    }
    double mean = sum / static_cast<double>(n);
    double var = sumsq / static_cast<double>(n) - mean * mean;
    double inv = var > 0 ? 1.0 / std::sqrt(var) : 0.0;
    for (std::int64_t r = 0; r < n; ++r)
      features.set_from_double(r, c, (features.get_as_double(r, c) - mean) * inv);
  }
}

}  // namespace hdkit::apps
