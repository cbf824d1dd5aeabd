#include "tabsense/models/forest.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "tabsense/core/error.hpp"
#include "tabsense/core/random.hpp"

namespace tabsense::models {

namespace {

struct SplitChoice {
  int32_t feature = -1;
  double threshold = 0.0;
  double score = -INFINITY;
};

class TreeBuilder {
 public:
  TreeBuilder(const RandomForestParams& params, const Matrix& inputs, const Matrix& targets,
              int mtry, Rng& rng)
      : params_(params), x_(inputs), y_(targets), mtry_(mtry), rng_(rng) {}

  Tree Build(std::vector<size_t> samples) {
    samples_ = std::move(samples);
    tree_ = Tree{};
    tree_.out_dim = static_cast<int>(y_.cols());
    struct Pending {
      int32_t node;
      size_t begin, end;
      int depth;
    };
    std::vector<Pending> stack;
    stack.push_back({tree_.AddNode(), 0, samples_.size(), 0});
    while (!stack.empty()) {
      const Pending t = stack.back();
      stack.pop_back();
      SetLeafValue(t.node, t.begin, t.end);
      const size_t count = t.end - t.begin;
      if (count < static_cast<size_t>(params_.min_samples_split)) continue;
      if (params_.max_depth > 0 && t.depth >= params_.max_depth) continue;
      if (IsPure(t.begin, t.end)) continue;

      const SplitChoice best = FindSplit(t.begin, t.end);
      if (best.feature < 0) continue;

      auto first = samples_.begin() + static_cast<std::ptrdiff_t>(t.begin);
      auto last = samples_.begin() + static_cast<std::ptrdiff_t>(t.end);
      auto mid = std::stable_partition(first, last, [&](size_t row) {
        return x_(static_cast<Eigen::Index>(row), best.feature) <= best.threshold;
      });
      const size_t split_at = static_cast<size_t>(mid - samples_.begin());

      const int32_t left = tree_.AddNode();
      const int32_t right = tree_.AddNode();
      auto& node = tree_.nodes[t.node];
      node.feature = best.feature;
      node.threshold = best.threshold;
      node.left = left;
      node.right = right;
      stack.push_back({right, split_at, t.end, t.depth + 1});
      stack.push_back({left, t.begin, split_at, t.depth + 1});
    }
    return std::move(tree_);
  }

 private:
  void SetLeafValue(int32_t node, size_t begin, size_t end) {
    const auto out = y_.cols();
    double* value = tree_.values.data() + static_cast<size_t>(node) * out;
    std::fill(value, value + out, 0.0);
    for (size_t i = begin; i < end; ++i) {
      const auto row = static_cast<Eigen::Index>(samples_[i]);
      for (Eigen::Index o = 0; o < out; ++o) value[o] += y_(row, o);
    }
    for (Eigen::Index o = 0; o < out; ++o) value[o] /= static_cast<double>(end - begin);
  }

  bool IsPure(size_t begin, size_t end) const {
    const auto first = static_cast<Eigen::Index>(samples_[begin]);
    for (size_t i = begin + 1; i < end; ++i) {
      if (y_.row(static_cast<Eigen::Index>(samples_[i])) != y_.row(first)) return false;
    }
    return true;
  }

  // Gini on one-hot targets and variance reduction on real targets share one
  // criterion: maximize sum_o (S_left,o^2 / n_left + S_right,o^2 / n_right),
  // where S are per-output target sums (class counts for one-hot targets).
  void ScanFeature(int32_t feature, size_t begin, size_t end, SplitChoice& best) {
    const size_t n = end - begin;
    const auto out = y_.cols();
    order_.resize(n);
    for (size_t i = 0; i < n; ++i) {
      const size_t row = samples_[begin + i];
      order_[i] = {x_(static_cast<Eigen::Index>(row), feature), row};
    }
    std::sort(order_.begin(), order_.end());
    if (order_.front().first == order_.back().first) return;

    total_.assign(static_cast<size_t>(out), 0.0);
    for (const auto& [v, row] : order_) {
      for (Eigen::Index o = 0; o < out; ++o) total_[o] += y_(static_cast<Eigen::Index>(row), o);
    }
    left_.assign(static_cast<size_t>(out), 0.0);
    const size_t min_leaf = static_cast<size_t>(params_.min_samples_leaf);
    for (size_t i = 0; i + 1 < n; ++i) {
      const auto row = static_cast<Eigen::Index>(order_[i].second);
      for (Eigen::Index o = 0; o < out; ++o) left_[o] += y_(row, o);
      if (order_[i].first == order_[i + 1].first) continue;
      const size_t n_left = i + 1;
      const size_t n_right = n - n_left;
      if (n_left < min_leaf || n_right < min_leaf) continue;
      double score = 0.0;
      for (Eigen::Index o = 0; o < out; ++o) {
        const double right = total_[o] - left_[o];
        score += left_[o] * left_[o] / n_left + right * right / n_right;
      }
      if (score > best.score) {
        const double a = order_[i].first;
        const double b = order_[i + 1].first;
        double threshold = a + (b - a) / 2.0;
        if (!(threshold < b)) threshold = a;
        best = {feature, threshold, score};
      }
    }
  }

  SplitChoice FindSplit(size_t begin, size_t end) {
    const auto d = static_cast<int32_t>(x_.cols());
    std::vector<int32_t> features(static_cast<size_t>(d));
    std::iota(features.begin(), features.end(), 0);
    // Partial Fisher-Yates: the first mtry entries are the sampled features.
    for (int32_t i = 0; i < mtry_; ++i) {
      const auto j = i + static_cast<int32_t>(rng_.Index(static_cast<uint64_t>(d - i)));
      std::swap(features[i], features[j]);
    }
    std::vector<int32_t> sampled(features.begin(), features.begin() + mtry_);
    std::vector<int32_t> rest(features.begin() + mtry_, features.end());
    std::sort(sampled.begin(), sampled.end());
    std::sort(rest.begin(), rest.end());

    SplitChoice best;
    for (int32_t f : sampled) ScanFeature(f, begin, end, best);
    // Keep looking when every sampled column is constant within the node.
    if (best.feature < 0) {
      for (int32_t f : rest) ScanFeature(f, begin, end, best);
    }
    return best;
  }

  const RandomForestParams& params_;
  const Matrix& x_;
  const Matrix& y_;
  int mtry_;
  Rng& rng_;
  Tree tree_;
  std::vector<size_t> samples_;
  std::vector<std::pair<double, size_t>> order_;
  std::vector<double> total_;
  std::vector<double> left_;
};

}  // namespace

ForestState TrainForest(const RandomForestParams& params, data::Task /*task*/, const Matrix& inputs,
                        const Matrix& targets, uint64_t seed) {
  Require(inputs.rows() == targets.rows(), ErrorCode::kInvalidArgument, "row count mismatch");
  Require(inputs.rows() >= 1, ErrorCode::kPrecondition, "no training rows");
  const auto n = static_cast<size_t>(inputs.rows());
  const auto d = static_cast<int>(inputs.cols());
  int mtry = params.max_features > 0 ? std::min(params.max_features, d)
                                     : static_cast<int>(std::ceil(std::sqrt(static_cast<double>(d))));
  mtry = std::clamp(mtry, 1, d);

  ForestState state;
  state.out_dim = static_cast<int>(targets.cols());
  Rng master(seed);
  for (int t = 0; t < params.n_trees; ++t) {
    Rng rng(master.Fork());
    std::vector<size_t> samples(n);
    if (params.bootstrap) {
      for (auto& s : samples) s = rng.Index(n);
    } else {
      std::iota(samples.begin(), samples.end(), size_t{0});
    }
    TreeBuilder builder(params, inputs, targets, mtry, rng);
    state.trees.push_back(builder.Build(std::move(samples)));
  }
  return state;
}

Matrix PredictForest(const ForestState& state, const Matrix& inputs) {
  Matrix out = Matrix::Zero(inputs.rows(), state.out_dim);
  for (Eigen::Index r = 0; r < inputs.rows(); ++r) {
    const double* row = inputs.data() + r * inputs.cols();
    for (const auto& tree : state.trees) {
      const double* leaf = tree.Evaluate(row);
      for (int o = 0; o < state.out_dim; ++o) out(r, o) += leaf[o];
    }
  }
  out /= static_cast<double>(state.trees.size());
  return out;
}

}  // namespace tabsense::models
