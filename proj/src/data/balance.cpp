#include "tabsense/data/balance.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "tabsense/core/error.hpp"
#include "tabsense/core/format.hpp"
#include "tabsense/core/random.hpp"

namespace tabsense::data {

namespace {

constexpr size_t kMaxDiscreteValues = 32;

// Per-row integer key for one feature (-1 when missing) plus the key labels.
struct KeyedFeature {
  std::vector<int> keys;
  std::vector<std::string> labels;
};

KeyedFeature KeyFeature(const DataTable& table, const std::string& name, const BinSpec& bins) {
  const size_t f = table.FeatureIndex(name);
  const auto& spec = table.schema[f];
  const auto& column = table.columns[f];
  KeyedFeature out;
  out.keys.assign(table.rows(), -1);

  if (spec.kind == FeatureKind::kCategorical) {
    out.labels = spec.categories;
    for (size_t r = 0; r < table.rows(); ++r) out.keys[r] = column.codes[r];
    return out;
  }

  auto bin_it = bins.find(name);
  if (bin_it != bins.end()) {
    const int n_bins = bin_it->second;
    Require(n_bins >= 1, ErrorCode::kInvalidArgument, "bin count must be positive");
    double lo = INFINITY, hi = -INFINITY;
    for (double v : column.numeric) {
      if (std::isnan(v)) continue;
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    const double width = (hi - lo) / n_bins;
    for (int b = 0; b < n_bins; ++b) {
      out.labels.push_back("[" + FormatDouble(lo + b * width) + ", " +
                           FormatDouble(b + 1 == n_bins ? hi : lo + (b + 1) * width) + "]");
    }
    for (size_t r = 0; r < table.rows(); ++r) {
      const double v = column.numeric[r];
      if (std::isnan(v)) continue;
      int b = width > 0 ? static_cast<int>((v - lo) / width) : 0;
      out.keys[r] = std::clamp(b, 0, n_bins - 1);
    }
    return out;
  }

  std::set<double> distinct;
  for (double v : column.numeric) {
    if (std::isnan(v)) continue;
    Require(v == std::floor(v), ErrorCode::kInvalidArgument,
            "feature '" + name + "' is continuous; balancing it requires binning");
    distinct.insert(v);
    Require(distinct.size() <= kMaxDiscreteValues, ErrorCode::kInvalidArgument,
            "feature '" + name + "' has too many distinct values; balancing it requires binning");
  }
  std::map<double, int> index;
  for (double v : distinct) {
    index[v] = static_cast<int>(out.labels.size());
    out.labels.push_back(FormatDouble(v));
  }
  for (size_t r = 0; r < table.rows(); ++r) {
    if (!std::isnan(column.numeric[r])) out.keys[r] = index.at(column.numeric[r]);
  }
  return out;
}

}  // namespace

BalanceReport MakeBalanceReport(const DataTable& table, const std::vector<std::string>& features,
                                const BinSpec& bins) {
  BalanceReport report;
  for (const auto& name : features) {
    const KeyedFeature keyed = KeyFeature(table, name, bins);
    std::vector<size_t> counts(keyed.labels.size(), 0);
    size_t total = 0;
    for (int k : keyed.keys) {
      if (k < 0) continue;
      ++counts[static_cast<size_t>(k)];
      ++total;
    }
    FeatureBalance fb;
    fb.feature = name;
    size_t max_count = 0;
    size_t min_count = SIZE_MAX;
    for (size_t k = 0; k < counts.size(); ++k) {
      fb.entries.push_back({keyed.labels[k], counts[k],
                            total == 0 ? 0.0 : static_cast<double>(counts[k]) / total});
      max_count = std::max(max_count, counts[k]);
      min_count = std::min(min_count, counts[k]);
    }
    fb.imbalance_ratio = (min_count == 0 || min_count == SIZE_MAX)
                             ? INFINITY
                             : static_cast<double>(max_count) / static_cast<double>(min_count);
    report.features.push_back(std::move(fb));
  }
  return report;
}

DataTable ApplyBalancing(const DataTable& table, const std::vector<std::string>& targets,
                         const BinSpec& bins, uint64_t seed) {
  Require(!targets.empty(), ErrorCode::kInvalidArgument, "no balancing targets given");
  std::vector<KeyedFeature> keyed;
  for (const auto& name : targets) keyed.push_back(KeyFeature(table, name, bins));

  // Joint key over all targets, train rows with every target present.
  std::map<std::vector<int>, std::vector<size_t>> groups;
  for (size_t r = 0; r < table.rows(); ++r) {
    if (table.splits[r] != Split::kTrain) continue;
    std::vector<int> key;
    bool ok = true;
    for (const auto& k : keyed) {
      ok = ok && k.keys[r] >= 0;
      key.push_back(k.keys[r]);
    }
    if (ok) groups[key].push_back(r);
  }
  size_t target_count = 0;
  for (const auto& [key, rows] : groups) target_count = std::max(target_count, rows.size());

  std::vector<size_t> extra;
  Rng rng(seed);
  for (const auto& [key, rows] : groups) {
    for (size_t i = rows.size(); i < target_count; ++i) {
      extra.push_back(rows[rng.Index(rows.size())]);
    }
  }
  if (extra.empty()) return table;

  DataTable out = table;
  for (size_t r : extra) {
    for (size_t c = 0; c < out.columns.size(); ++c) {
      auto& column = out.columns[c];
      if (!column.numeric.empty()) column.numeric.push_back(table.columns[c].numeric[r]);
      if (!column.codes.empty()) column.codes.push_back(table.columns[c].codes[r]);
    }
    out.splits.push_back(Split::kTrain);
  }
  return out;
}

}  // namespace tabsense::data
