#pragma once

#include <string>
#include <vector>

#include "hdkit/tensor.hpp"

namespace hdkit::apps {

struct Dataset {
  Hypermatrix features;             // N x F, f32
  std::vector<std::int64_t> labels; // empty when unlabeled
  std::int64_t class_count = 0;

  std::int64_t samples() const { return features.rows(); }
  std::int64_t feature_count() const { return features.dim(); }
  bool labeled() const { return !labels.empty(); }
};

enum class CsvFormat {
  LabelFirst,  // integer label, then F floats
  Isolet,      // F floats, then 1-based class label (UCI isolet .data rows)
};

CsvFormat csv_format_from_string(std::string_view s);

// Parses a comma-separated file; errors name the offending line and column.
// normalize applies a per-column z-score over the loaded rows.
Dataset load_dataset(const std::string& path, CsvFormat format, bool skip_header = false,
                     bool normalize = false);

Dataset dataset_from_rows(const std::vector<std::vector<double>>& rows,
                          const std::vector<std::int64_t>& labels);

void zscore_columns(Hypermatrix& features);

}  // namespace hdkit::apps
