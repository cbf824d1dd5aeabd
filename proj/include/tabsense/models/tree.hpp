#pragma once

#include <cstdint>
#include <vector>

namespace tabsense::models {

struct TreeNode {
  // -1 marks a leaf.
  int32_t feature = -1;
  double threshold = 0.0;
  int32_t left = -1;
  int32_t right = -1;
};

// Binary tree over encoded columns; rows with x[feature] <= threshold go left.
// Every node owns `out_dim` values, read only at leaves.
struct Tree {
  std::vector<TreeNode> nodes;
  std::vector<double> values;
  int out_dim = 1;

  const double* Evaluate(const double* row) const {
    int32_t node = 0;
    while (nodes[node].feature >= 0) {
      node = row[nodes[node].feature] <= nodes[node].threshold ? nodes[node].left
                                                               : nodes[node].right;
    }
    return values.data() + static_cast<size_t>(node) * out_dim;
  }

  int32_t AddNode() {
    nodes.emplace_back();
    values.resize(values.size() + static_cast<size_t>(out_dim), 0.0);
    return static_cast<int32_t>(nodes.size() - 1);
  }

  int Depth() const;
  // Columns used by at least one split.
  std::vector<int32_t> UsedFeatures() const;
};

}  // namespace tabsense::models
