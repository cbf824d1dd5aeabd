#include "tabsense/data/table.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <set>
#include <sstream>
#include <unordered_map>

#include "tabsense/core/error.hpp"
#include "tabsense/core/random.hpp"

namespace tabsense::data {

std::string_view SplitName(Split split) {
  switch (split) {
    case Split::kTrain: return "train";
    case Split::kValidation: return "validation";
    case Split::kTest: return "test";
  }
  return "train";
}

Split ParseSplit(std::string_view name) {
  if (name == "train") return Split::kTrain;
  if (name == "validation") return Split::kValidation;
  if (name == "test") return Split::kTest;
  Fail(ErrorCode::kInvalidArgument, "unknown split '" + std::string(name) + "'");
}

RoleHint ParseRoleHint(std::string_view name) {
  if (name == "all") return RoleHint::kAll;
  if (name == "train") return RoleHint::kTrain;
  if (name == "validation") return RoleHint::kValidation;
  if (name == "test") return RoleHint::kTest;
  Fail(ErrorCode::kInvalidArgument, "unknown role hint '" + std::string(name) + "'");
}

bool Column::IsMissing(size_t row) const {
  if (!numeric.empty()) return std::isnan(numeric[row]);
  return codes[row] < 0;
}

size_t DataTable::FeatureIndex(std::string_view name) const {
  for (size_t i = 0; i < schema.size(); ++i) {
    if (schema[i].name == name) return i;
  }
  Fail(ErrorCode::kNotFound, "unknown feature '" + std::string(name) + "'");
}

std::vector<size_t> DataTable::RowsIn(Split split) const {
  std::vector<size_t> rows;
  for (size_t i = 0; i < splits.size(); ++i) {
    if (splits[i] == split) rows.push_back(i);
  }
  return rows;
}

namespace {

std::string_view Trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
  return s;
}

}  // namespace

std::optional<double> ParseReal(std::string_view text) {
  text = Trim(text);
  if (!text.empty() && text.front() == '+') text.remove_prefix(1);
  if (text.empty()) return std::nullopt;
  double value = 0.0;
  const auto result = std::from_chars(text.data(), text.data() + text.size(), value);
  if (result.ec != std::errc() || result.ptr != text.data() + text.size()) return std::nullopt;
  if (!std::isfinite(value)) return std::nullopt;
  return value;
}

CsvDocument ParseCsvDocument(std::string_view text) {
  if (text.size() >= 3 && text.substr(0, 3) == "\xEF\xBB\xBF") text.remove_prefix(3);
  Require(!text.empty(), ErrorCode::kFormat, "empty CSV file");

  CsvDocument doc;
  std::vector<std::string> record;
  std::string field;
  size_t line = 1;
  size_t pos = 0;
  bool header_done = false;

  auto finish_record = [&]() {
    if (!header_done) {
      doc.header = std::move(record);
      doc.columns.assign(doc.header.size(), {});
      header_done = true;
    } else {
      // A lone empty field is a blank line.
      if (record.size() == 1 && record[0].empty()) {
        record.clear();
        return;
      }
      if (record.size() != doc.header.size()) {
        Fail(ErrorCode::kFormat, "ragged row at line " + std::to_string(line) + ": expected " +
                                     std::to_string(doc.header.size()) + " fields, got " +
                                     std::to_string(record.size()));
      }
      for (size_t c = 0; c < record.size(); ++c) doc.columns[c].push_back(std::move(record[c]));
    }
    record.clear();
  };

  while (pos <= text.size()) {
    field.clear();
    bool quoted = false;
    if (pos < text.size() && text[pos] == '"') {
      quoted = true;
      ++pos;
      while (true) {
        Require(pos < text.size(), ErrorCode::kFormat,
                "unterminated quoted field at line " + std::to_string(line));
        const char ch = text[pos];
        if (ch == '"') {
          if (pos + 1 < text.size() && text[pos + 1] == '"') {
            field.push_back('"');
            pos += 2;
            continue;
          }
          ++pos;
          break;
        }
        if (ch == '\n') ++line;
        field.push_back(ch);
        ++pos;
      }
    }
    // Unquoted content (or junk after a closing quote, kept verbatim).
    const size_t start = pos;
    while (pos < text.size() && text[pos] != ',' && text[pos] != '\n' && text[pos] != '\r') ++pos;
    if (!quoted) {
      field.assign(text.substr(start, pos - start));
    } else {
      field.append(text.substr(start, pos - start));
    }
    record.push_back(quoted ? field : std::string(Trim(field)));

    if (pos >= text.size()) {
      finish_record();
      break;
    }
    const char sep = text[pos];
    if (sep == ',') {
      ++pos;
      continue;
    }
    if (sep == '\r') ++pos;
    if (pos < text.size() && text[pos] == '\n') ++pos;
    finish_record();
    ++line;
    if (pos >= text.size()) break;
  }

  Require(!doc.header.empty(), ErrorCode::kFormat, "CSV header is missing");
  std::set<std::string> seen;
  for (const auto& name : doc.header) {
    Require(!name.empty(), ErrorCode::kFormat, "CSV header contains an empty column name");
    Require(seen.insert(name).second, ErrorCode::kFormat, "duplicate column name '" + name + "'");
  }
  return doc;
}

namespace {

Split SplitForHint(RoleHint hint) {
  switch (hint) {
    case RoleHint::kValidation: return Split::kValidation;
    case RoleHint::kTest: return Split::kTest;
    default: return Split::kTrain;
  }
}

}  // namespace

DataTable BuildTable(const std::vector<CsvDocument>& documents, const std::vector<RoleHint>& hints) {
  Require(!documents.empty() && documents.size() == hints.size(), ErrorCode::kInvalidArgument,
          "one role hint per document is required");
  const auto& header = documents.front().header;
  for (const auto& doc : documents) {
    Require(doc.header == header, ErrorCode::kFormat, "CSV files have different headers");
  }

  DataTable table;
  table.source = documents.size() > 1 ? DataSource::kSeparateFiles : DataSource::kSingleFileSplit;
  if (documents.size() == 1 && hints.front() != RoleHint::kAll) {
    table.source = DataSource::kSeparateFiles;
  }
  for (size_t d = 0; d < documents.size(); ++d) {
    table.splits.insert(table.splits.end(), documents[d].rows(), SplitForHint(hints[d]));
  }

  for (size_t c = 0; c < header.size(); ++c) {
    FeatureSpec spec;
    spec.name = header[c];
    bool numeric = true;
    for (const auto& doc : documents) {
      for (const auto& cell : doc.columns[c]) {
        if (!cell.empty() && !ParseReal(cell)) {
          numeric = false;
          break;
        }
      }
      if (!numeric) break;
    }

    Column column;
    if (numeric) {
      spec.kind = FeatureKind::kNumeric;
      column.numeric.reserve(table.rows());
      for (const auto& doc : documents) {
        for (const auto& cell : doc.columns[c]) {
          column.numeric.push_back(cell.empty() ? std::numeric_limits<double>::quiet_NaN()
                                                : *ParseReal(cell));
        }
      }
    } else {
      spec.kind = FeatureKind::kCategorical;
      std::set<std::string> labels;
      for (const auto& doc : documents) {
        for (const auto& cell : doc.columns[c]) {
          if (!cell.empty()) labels.insert(cell);
        }
      }
      spec.categories.assign(labels.begin(), labels.end());
      std::unordered_map<std::string, int32_t> index;
      for (size_t k = 0; k < spec.categories.size(); ++k) {
        index.emplace(spec.categories[k], static_cast<int32_t>(k));
      }
      column.codes.reserve(table.rows());
      for (const auto& doc : documents) {
        for (const auto& cell : doc.columns[c]) {
          column.codes.push_back(cell.empty() ? -1 : index.at(cell));
        }
      }
    }
    table.schema.push_back(std::move(spec));
    table.columns.push_back(std::move(column));
  }
  return table;
}

std::string ReadTextFile(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  Require(in.good(), ErrorCode::kIo, "cannot read file '" + path.string() + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

DataTable ParseCsv(std::string_view text, RoleHint hint) {
  return BuildTable({ParseCsvDocument(text)}, {hint});
}

DataTable LoadCsv(const std::filesystem::path& path, RoleHint hint) {
  return ParseCsv(ReadTextFile(path), hint);
}

DataTable LoadSplitFiles(const std::filesystem::path& train, const std::filesystem::path& validation,
                         const std::filesystem::path& test) {
  std::vector<CsvDocument> docs;
  std::vector<RoleHint> hints;
  const std::pair<const std::filesystem::path*, RoleHint> parts[] = {
      {&train, RoleHint::kTrain}, {&validation, RoleHint::kValidation}, {&test, RoleHint::kTest}};
  for (const auto& [path, hint] : parts) {
    if (path->empty()) continue;
    docs.push_back(ParseCsvDocument(ReadTextFile(*path)));
    hints.push_back(hint);
  }
  Require(!docs.empty(), ErrorCode::kInvalidArgument, "no data files given");
  DataTable table = BuildTable(docs, hints);
  table.source = DataSource::kSeparateFiles;
  return table;
}

DataTable SplitRandom(const DataTable& table, const SplitFractions& fractions, uint64_t seed) {
  Require(table.source == DataSource::kSingleFileSplit, ErrorCode::kPrecondition,
          "data loaded from separate files cannot be re-split");
  const double f[] = {fractions.train, fractions.validation, fractions.test};
  for (double v : f) {
    Require(std::isfinite(v) && v >= 0.0, ErrorCode::kInvalidArgument,
            "split fractions must be nonnegative");
  }
  Require(std::abs(f[0] + f[1] + f[2] - 1.0) <= 1e-9, ErrorCode::kInvalidArgument,
          "split fractions must sum to 1");

  const size_t n = table.rows();
  const auto n_train = std::min<size_t>(n, static_cast<size_t>(std::llround(n * f[0])));
  const auto n_val = std::min<size_t>(n - n_train, static_cast<size_t>(std::llround(n * f[1])));

  std::vector<size_t> order(n);
  std::iota(order.begin(), order.end(), size_t{0});
  Rng rng(seed);
  rng.Shuffle(order);

  DataTable out = table;
  for (size_t i = 0; i < n; ++i) {
    const Split s = i < n_train ? Split::kTrain
                    : i < n_train + n_val ? Split::kValidation
                                          : Split::kTest;
    out.splits[order[i]] = s;
  }
  return out;
}

DataTable AssignRoles(const DataTable& table, const std::vector<std::string>& inputs,
                      const std::vector<std::string>& outputs) {
  Require(!inputs.empty(), ErrorCode::kInvalidArgument, "at least one input feature is required");
  Require(!outputs.empty(), ErrorCode::kInvalidArgument, "at least one output feature is required");
  DataTable out = table;
  for (auto& spec : out.schema) spec.role = FeatureRole::kIgnored;
  for (const auto& name : inputs) {
    auto& spec = out.schema[out.FeatureIndex(name)];
    Require(spec.role == FeatureRole::kIgnored, ErrorCode::kInvalidArgument,
            "feature '" + name + "' selected twice");
    spec.role = FeatureRole::kInput;
  }
  for (const auto& name : outputs) {
    auto& spec = out.schema[out.FeatureIndex(name)];
    Require(spec.role == FeatureRole::kIgnored, ErrorCode::kInvalidArgument,
            "feature '" + name + "' is both input and output");
    spec.role = FeatureRole::kOutput;
  }
  return out;
}

}  // namespace tabsense::data
