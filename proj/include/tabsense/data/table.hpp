#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace tabsense::data {

enum class FeatureKind { kNumeric, kCategorical };
enum class FeatureRole { kInput, kOutput, kIgnored };
enum class Split : uint8_t { kTrain, kValidation, kTest };
enum class DataSource { kSingleFileSplit, kSeparateFiles };
// Which partition the rows of a loaded file belong to. kAll marks a single
// file that is divided later with SplitRandom.
enum class RoleHint { kAll, kTrain, kValidation, kTest };

std::string_view SplitName(Split split);
Split ParseSplit(std::string_view name);
RoleHint ParseRoleHint(std::string_view name);

struct FeatureSpec {
  std::string name;
  FeatureKind kind = FeatureKind::kNumeric;
  FeatureRole role = FeatureRole::kIgnored;
  // Sorted category labels; empty for numeric features.
  std::vector<std::string> categories;

  bool operator==(const FeatureSpec&) const = default;
};

// One column of a table. Exactly one of the two arrays is populated, matching
// the feature kind. Missing cells are NaN (numeric) or -1 (categorical).
struct Column {
  std::vector<double> numeric;
  std::vector<int32_t> codes;

  bool IsMissing(size_t row) const;
};

struct DataTable {
  std::vector<FeatureSpec> schema;
  std::vector<Column> columns;
  std::vector<Split> splits;
  DataSource source = DataSource::kSingleFileSplit;

  size_t rows() const { return splits.size(); }
  size_t FeatureIndex(std::string_view name) const;
  const FeatureSpec& Feature(std::string_view name) const {
    return schema[FeatureIndex(name)];
  }
  std::vector<size_t> RowsIn(Split split) const;
};

// Parsed CSV text before type inference: a header and one string per cell,
// stored column-wise. Empty strings are missing cells.
struct CsvDocument {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> columns;

  size_t rows() const { return columns.empty() ? 0 : columns.front().size(); }
};

// RFC 4180: comma separated, optional double-quote quoting with "" escapes,
// LF or CRLF line endings, mandatory header row.
CsvDocument ParseCsvDocument(std::string_view text);

// Builds a typed table from one or more documents with identical headers.
// A column is numeric iff every non-empty cell across all documents parses as
// a finite real; otherwise it is categorical with sorted category labels.
DataTable BuildTable(const std::vector<CsvDocument>& documents,
                     const std::vector<RoleHint>& hints);

DataTable ParseCsv(std::string_view text, RoleHint hint = RoleHint::kAll);
DataTable LoadCsv(const std::filesystem::path& path, RoleHint hint = RoleHint::kAll);

// Separate train / validation / test files; any path may be empty.
DataTable LoadSplitFiles(const std::filesystem::path& train,
                         const std::filesystem::path& validation,
                         const std::filesystem::path& test);

std::string ReadTextFile(const std::filesystem::path& path);

struct SplitFractions {
  double train = 0.70;
  double validation = 0.15;
  double test = 0.15;
};

// Seeded random partition. Sizes are round(n*train), round(n*validation) and
// the remainder; the same (table, fractions, seed) always gives the same
// assignment.
DataTable SplitRandom(const DataTable& table, const SplitFractions& fractions,
                      uint64_t seed);

// Marks the named features as inputs and outputs; every other feature becomes
// ignored.
DataTable AssignRoles(const DataTable& table, const std::vector<std::string>& inputs,
                      const std::vector<std::string>& outputs);

// Parses a real number the way type inference does.
std::optional<double> ParseReal(std::string_view text);

}  // namespace tabsense::data
