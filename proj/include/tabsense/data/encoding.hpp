#pragma once

#include <string>
#include <vector>

#include "tabsense/core/matrix.hpp"
#include "tabsense/data/table.hpp"

namespace tabsense::data {

enum class Task { kRegression, kClassification };

std::string_view TaskName(Task task);
Task ParseTask(std::string_view name);

// The feature selection a model is tied to. Categories are frozen here so data
// loaded later encodes onto the same columns.
struct EncodingSchema {
  Task task = Task::kRegression;
  std::vector<FeatureSpec> inputs;
  std::vector<FeatureSpec> outputs;

  bool operator==(const EncodingSchema&) const = default;
};

struct EncodedMatrix {
  // One-hot columns are named "feature=category".
  std::vector<std::string> column_names;
  Matrix values;
  // Encoded column -> index of the originating feature in the schema list.
  std::vector<size_t> group_map;

  size_t cols() const { return column_names.size(); }
};

// Encoded columns that originate from one feature.
struct FeatureGroup {
  std::string name;
  FeatureKind kind = FeatureKind::kNumeric;
  std::vector<size_t> columns;
  std::vector<std::string> categories;
};

std::vector<FeatureGroup> GroupsOf(const EncodedMatrix& matrix,
                                   const std::vector<FeatureSpec>& features);

struct EncodedDataset {
  EncodingSchema schema;
  // Features the input columns group into: schema.inputs, or one numeric
  // feature per principal component after ApplyPca.
  std::vector<FeatureSpec> input_features;
  EncodedMatrix inputs;
  EncodedMatrix outputs;
  // Table row of every encoded row.
  std::vector<size_t> source_rows;
  std::vector<Split> splits;
  size_t dropped_rows = 0;

  size_t rows() const { return splits.size(); }
  std::vector<size_t> RowsIn(Split split) const;
};

// Derives the encoding schema from the roles assigned in the table. In
// classification mode the single output becomes categorical; a numeric output
// uses its distinct values (ascending) as class labels.
EncodingSchema MakeEncodingSchema(const DataTable& table, Task task);

// One-hot encodes the selected features. Rows with a missing value in any
// selected feature, or a category unknown to the schema, are dropped and
// counted. Classification outputs are one-hot targets; regression outputs pass
// through.
EncodedDataset Encode(const DataTable& table, const EncodingSchema& schema);

Matrix SelectRows(const Matrix& values, const std::vector<size_t>& rows);

}  // namespace tabsense::data
