#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "tabsense/data/table.hpp"

namespace tabsense::data {

struct BalanceEntry {
  std::string label;
  size_t count = 0;
  double fraction = 0.0;
};

struct FeatureBalance {
  std::string feature;
  std::vector<BalanceEntry> entries;
  // Largest count over smallest count.
  double imbalance_ratio = 1.0;
};

struct BalanceReport {
  std::vector<FeatureBalance> features;
};

// Number of equal-width bins per continuous feature.
using BinSpec = std::map<std::string, int>;

// Counts per category. Numeric features need an entry in `bins` unless they
// hold few distinct integer values (at most 32), which are counted as-is.
BalanceReport MakeBalanceReport(const DataTable& table, const std::vector<std::string>& features,
                                const BinSpec& bins = {});

// Random oversampling of the train split: rows of minority keys (the joint
// category of all targets) are duplicated with replacement until every key
// matches the majority count. Other splits are untouched.
DataTable ApplyBalancing(const DataTable& table, const std::vector<std::string>& targets,
                         const BinSpec& bins, uint64_t seed);

}  // namespace tabsense::data
