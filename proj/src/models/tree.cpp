#include "tabsense/models/tree.hpp"

#include <algorithm>
#include <set>
#include <utility>

namespace tabsense::models {

int Tree::Depth() const {
  if (nodes.empty()) return 0;
  int depth = 0;
  std::vector<std::pair<int32_t, int>> stack{{0, 0}};
  while (!stack.empty()) {
    auto [node, d] = stack.back();
    stack.pop_back();
    depth = std::max(depth, d);
    if (nodes[node].feature >= 0) {
      stack.push_back({nodes[node].left, d + 1});
      stack.push_back({nodes[node].right, d + 1});
    }
  }
  return depth;
}

std::vector<int32_t> Tree::UsedFeatures() const {
  std::set<int32_t> used;
  for (const auto& node : nodes) {
    if (node.feature >= 0) used.insert(node.feature);
  }
  return {used.begin(), used.end()};
}

}  // namespace tabsense::models
