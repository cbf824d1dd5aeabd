#include "tabsense/data/encoding.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <unordered_map>

#include "tabsense/core/error.hpp"
#include "tabsense/core/format.hpp"

namespace tabsense::data {

std::string_view TaskName(Task task) {
  return task == Task::kRegression ? "regression" : "classification";
}

Task ParseTask(std::string_view name) {
  if (name == "regression") return Task::kRegression;
  if (name == "classification") return Task::kClassification;
  Fail(ErrorCode::kInvalidArgument, "unknown task '" + std::string(name) + "'");
}

std::vector<FeatureGroup> GroupsOf(const EncodedMatrix& matrix,
                                   const std::vector<FeatureSpec>& features) {
  std::vector<FeatureGroup> groups(features.size());
  for (size_t f = 0; f < features.size(); ++f) {
    groups[f].name = features[f].name;
    groups[f].kind = features[f].kind;
    groups[f].categories = features[f].categories;
  }
  for (size_t c = 0; c < matrix.group_map.size(); ++c) {
    groups.at(matrix.group_map[c]).columns.push_back(c);
  }
  return groups;
}

std::vector<size_t> EncodedDataset::RowsIn(Split split) const {
  std::vector<size_t> rows;
  for (size_t i = 0; i < splits.size(); ++i) {
    if (splits[i] == split) rows.push_back(i);
  }
  return rows;
}

EncodingSchema MakeEncodingSchema(const DataTable& table, Task task) {
  EncodingSchema schema;
  schema.task = task;
  for (size_t f = 0; f < table.schema.size(); ++f) {
    const auto& spec = table.schema[f];
    if (spec.role == FeatureRole::kInput) schema.inputs.push_back(spec);
    if (spec.role != FeatureRole::kOutput) continue;
    FeatureSpec out = spec;
    if (task == Task::kRegression) {
      Require(spec.kind == FeatureKind::kNumeric, ErrorCode::kInvalidArgument,
              "regression output '" + spec.name + "' must be numeric");
    } else if (spec.kind == FeatureKind::kNumeric) {
      std::set<double> distinct;
      for (double v : table.columns[f].numeric) {
        if (!std::isnan(v)) distinct.insert(v);
      }
      out.kind = FeatureKind::kCategorical;
      out.categories.clear();
      for (double v : distinct) out.categories.push_back(FormatDouble(v));
    }
    schema.outputs.push_back(std::move(out));
  }
  Require(!schema.inputs.empty(), ErrorCode::kPrecondition, "no input features selected");
  Require(!schema.outputs.empty(), ErrorCode::kPrecondition, "no output features selected");
  if (task == Task::kClassification) {
    Require(schema.outputs.size() == 1, ErrorCode::kInvalidArgument,
            "classification supports exactly one output feature");
    Require(schema.outputs.front().categories.size() >= 2, ErrorCode::kInvalidArgument,
            "classification output needs at least two classes");
  }
  return schema;
}

namespace {

// Resolves each schema feature to a per-row code (categorical) or value
// (numeric) read from the table; -1 / NaN marks an unusable cell.
struct ResolvedFeature {
  const FeatureSpec* spec = nullptr;
  std::vector<double> values;
  std::vector<int32_t> codes;
};

ResolvedFeature Resolve(const DataTable& table, const FeatureSpec& spec) {
  ResolvedFeature r;
  r.spec = &spec;
  const size_t f = table.FeatureIndex(spec.name);
  const auto& source = table.schema[f];
  const auto& column = table.columns[f];
  if (spec.kind == FeatureKind::kNumeric) {
    Require(source.kind == FeatureKind::kNumeric, ErrorCode::kFingerprintMismatch,
            "feature '" + spec.name + "' is not numeric in this data");
    r.values = column.numeric;
    return r;
  }
  std::unordered_map<std::string, int32_t> index;
  for (size_t k = 0; k < spec.categories.size(); ++k) {
    index.emplace(spec.categories[k], static_cast<int32_t>(k));
  }
  r.codes.assign(table.rows(), -1);
  for (size_t row = 0; row < table.rows(); ++row) {
    if (column.IsMissing(row)) continue;
    const std::string label = source.kind == FeatureKind::kNumeric
                                  ? FormatDouble(column.numeric[row])
                                  : source.categories[column.codes[row]];
    auto it = index.find(label);
    if (it != index.end()) r.codes[row] = it->second;
  }
  return r;
}

bool Usable(const ResolvedFeature& r, size_t row) {
  return r.spec->kind == FeatureKind::kNumeric ? !std::isnan(r.values[row]) : r.codes[row] >= 0;
}

EncodedMatrix MakeMatrix(const std::vector<ResolvedFeature>& features,
                         const std::vector<size_t>& rows) {
  EncodedMatrix m;
  for (size_t f = 0; f < features.size(); ++f) {
    const auto& spec = *features[f].spec;
    if (spec.kind == FeatureKind::kNumeric) {
      m.column_names.push_back(spec.name);
      m.group_map.push_back(f);
    } else {
      for (const auto& cat : spec.categories) {
        m.column_names.push_back(spec.name + "=" + cat);
        m.group_map.push_back(f);
      }
    }
  }
  m.values = Matrix::Zero(static_cast<Eigen::Index>(rows.size()),
                          static_cast<Eigen::Index>(m.column_names.size()));
  for (size_t i = 0; i < rows.size(); ++i) {
    Eigen::Index col = 0;
    for (const auto& f : features) {
      if (f.spec->kind == FeatureKind::kNumeric) {
        m.values(static_cast<Eigen::Index>(i), col++) = f.values[rows[i]];
      } else {
        m.values(static_cast<Eigen::Index>(i), col + f.codes[rows[i]]) = 1.0;
        col += static_cast<Eigen::Index>(f.spec->categories.size());
      }
    }
  }
  return m;
}

}  // namespace

EncodedDataset Encode(const DataTable& table, const EncodingSchema& schema) {
  Require(!schema.inputs.empty() && !schema.outputs.empty(), ErrorCode::kPrecondition,
          "encoding needs at least one input and one output feature");
  std::vector<ResolvedFeature> inputs;
  std::vector<ResolvedFeature> outputs;
  for (const auto& spec : schema.inputs) inputs.push_back(Resolve(table, spec));
  for (const auto& spec : schema.outputs) outputs.push_back(Resolve(table, spec));

  EncodedDataset ds;
  ds.schema = schema;
  ds.input_features = schema.inputs;
  for (size_t row = 0; row < table.rows(); ++row) {
    bool ok = true;
    for (const auto& f : inputs) ok = ok && Usable(f, row);
    for (const auto& f : outputs) ok = ok && Usable(f, row);
    if (ok) {
      ds.source_rows.push_back(row);
      ds.splits.push_back(table.splits[row]);
    } else {
      ++ds.dropped_rows;
    }
  }
  Require(!ds.source_rows.empty(), ErrorCode::kPrecondition,
          "no rows remain after dropping " + std::to_string(ds.dropped_rows) +
              " rows with missing values");
  ds.inputs = MakeMatrix(inputs, ds.source_rows);
  ds.outputs = MakeMatrix(outputs, ds.source_rows);
  return ds;
}

Matrix SelectRows(const Matrix& values, const std::vector<size_t>& rows) {
  Matrix out(static_cast<Eigen::Index>(rows.size()), values.cols());
  for (size_t i = 0; i < rows.size(); ++i) {
    out.row(static_cast<Eigen::Index>(i)) = values.row(static_cast<Eigen::Index>(rows[i]));
  }
  return out;
}

}  // namespace tabsense::data
