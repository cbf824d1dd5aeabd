#include "tabsense/models/boosting.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>

#include "tabsense/core/error.hpp"

namespace tabsense::models {

double BoostedEnsemble::Margin(const double* row) const {
  double margin = base_score;
  for (const auto& tree : trees) margin += *tree.Evaluate(row);
  return margin;
}

namespace {

double Sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

// Quantized view of the training inputs. Row r of column f falls in bin
// b = first index with cuts[f][b] >= x, so "bin <= b" is exactly
// "x <= cuts[f][b]", which is the test trees apply at prediction time.
struct BinnedInputs {
  std::vector<std::vector<double>> cuts;
  std::vector<std::vector<uint16_t>> bins;  // column-major
};

BinnedInputs BinInputs(const Matrix& x, int max_bins) {
  const auto n = static_cast<size_t>(x.rows());
  BinnedInputs out;
  out.cuts.resize(static_cast<size_t>(x.cols()));
  out.bins.resize(static_cast<size_t>(x.cols()));
  std::vector<double> sorted(n);
  for (Eigen::Index f = 0; f < x.cols(); ++f) {
    for (size_t r = 0; r < n; ++r) sorted[r] = x(static_cast<Eigen::Index>(r), f);
    std::sort(sorted.begin(), sorted.end());
    std::vector<double> unique = sorted;
    unique.erase(std::unique(unique.begin(), unique.end()), unique.end());

    auto midpoint = [&](size_t u) {
      const double a = unique[u], b = unique[u + 1];
      const double m = a + (b - a) / 2.0;
      return m < b ? m : a;
    };
    auto& cuts = out.cuts[static_cast<size_t>(f)];
    if (unique.size() <= static_cast<size_t>(max_bins)) {
      for (size_t u = 0; u + 1 < unique.size(); ++u) cuts.push_back(midpoint(u));
    } else {
      for (int k = 1; k < max_bins; ++k) {
        const double q = sorted[static_cast<size_t>(static_cast<double>(k) * n / max_bins)];
        const size_t u = static_cast<size_t>(
            std::lower_bound(unique.begin(), unique.end(), q) - unique.begin());
        if (u + 1 < unique.size()) cuts.push_back(midpoint(u));
      }
      cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
    }
    auto& bins = out.bins[static_cast<size_t>(f)];
    bins.resize(n);
    for (size_t r = 0; r < n; ++r) {
      const double v = x(static_cast<Eigen::Index>(r), f);
      bins[r] = static_cast<uint16_t>(std::lower_bound(cuts.begin(), cuts.end(), v) - cuts.begin());
    }
  }
  return out;
}

class BoostedTreeGrower {
 public:
  BoostedTreeGrower(const BoostedTreeParams& params, const BinnedInputs& binned, size_t rows)
      : params_(params), binned_(binned), rows_(rows) {}

  // Grows one tree on (grad, hess) and adds its leaf values to `margin`.
  Tree Grow(const std::vector<double>& grad, const std::vector<double>& hess,
            std::vector<double>& margin) {
    Tree tree;
    tree.out_dim = 1;
    order_.resize(rows_);
    for (size_t i = 0; i < rows_; ++i) order_[i] = static_cast<uint32_t>(i);

    struct Pending {
      int32_t node;
      size_t begin, end;
      int depth;
      double g, h;
    };
    double g0 = 0.0, h0 = 0.0;
    for (size_t i = 0; i < rows_; ++i) {
      g0 += grad[i];
      h0 += hess[i];
    }
    std::vector<Pending> stack{{tree.AddNode(), 0, rows_, 0, g0, h0}};
    while (!stack.empty()) {
      const Pending t = stack.back();
      stack.pop_back();
      Candidate best;
      if (t.depth < params_.max_depth && t.end - t.begin >= 2) {
        best = FindSplit(t.begin, t.end, t.g, t.h, grad, hess);
      }
      if (best.feature < 0) {
        const double w = -params_.learning_rate * t.g / (t.h + params_.lambda);
        tree.values[static_cast<size_t>(t.node)] = w;
        for (size_t i = t.begin; i < t.end; ++i) margin[order_[i]] += w;
        continue;
      }
      const auto& bins = binned_.bins[static_cast<size_t>(best.feature)];
      auto first = order_.begin() + static_cast<std::ptrdiff_t>(t.begin);
      auto last = order_.begin() + static_cast<std::ptrdiff_t>(t.end);
      auto mid = std::stable_partition(first, last, [&](uint32_t r) { return bins[r] <= best.bin; });
      const size_t split_at = static_cast<size_t>(mid - order_.begin());

      const int32_t left = tree.AddNode();
      const int32_t right = tree.AddNode();
      auto& node = tree.nodes[static_cast<size_t>(t.node)];
      node.feature = best.feature;
      node.threshold = binned_.cuts[static_cast<size_t>(best.feature)][best.bin];
      node.left = left;
      node.right = right;
      stack.push_back({right, split_at, t.end, t.depth + 1, t.g - best.g_left, t.h - best.h_left});
      stack.push_back({left, t.begin, split_at, t.depth + 1, best.g_left, best.h_left});
    }
    return tree;
  }

 private:
  struct Candidate {
    int32_t feature = -1;
    uint16_t bin = 0;
    double gain = 0.0;
    double g_left = 0.0;
    double h_left = 0.0;
  };

  Candidate FindSplit(size_t begin, size_t end, double g, double h, const std::vector<double>& grad,
                      const std::vector<double>& hess) {
    const double lambda = params_.lambda;
    const double parent = g * g / (h + lambda);
    Candidate best;
    best.gain = 1e-12;  // require a strictly positive gain
    for (size_t f = 0; f < binned_.cuts.size(); ++f) {
      const size_t n_cuts = binned_.cuts[f].size();
      if (n_cuts == 0) continue;
      hist_g_.assign(n_cuts + 1, 0.0);
      hist_h_.assign(n_cuts + 1, 0.0);
      const auto& bins = binned_.bins[f];
      for (size_t i = begin; i < end; ++i) {
        const uint32_t r = order_[i];
        hist_g_[bins[r]] += grad[r];
        hist_h_[bins[r]] += hess[r];
      }
      double gl = 0.0, hl = 0.0;
      for (size_t b = 0; b < n_cuts; ++b) {
        gl += hist_g_[b];
        hl += hist_h_[b];
        const double gr = g - gl;
        const double hr = h - hl;
        if (hl < params_.min_child_weight || hr < params_.min_child_weight) continue;
        if (hist_h_[b] == 0.0 && b > 0) continue;  // empty bin: same partition as b-1
        const double gain =
            0.5 * (gl * gl / (hl + lambda) + gr * gr / (hr + lambda) - parent) - params_.gamma;
        if (gain > best.gain) {
          best = {static_cast<int32_t>(f), static_cast<uint16_t>(b), gain, gl, hl};
        }
      }
    }
    return best;
  }

  const BoostedTreeParams& params_;
  const BinnedInputs& binned_;
  size_t rows_;
  std::vector<uint32_t> order_;
  std::vector<double> hist_g_;
  std::vector<double> hist_h_;
};

}  // namespace

BoostedState TrainBoosted(const BoostedTreeParams& params, data::Task task, const Matrix& inputs,
                          const Matrix& targets, std::vector<double>* history) {
  Require(inputs.rows() == targets.rows(), ErrorCode::kInvalidArgument, "row count mismatch");
  Require(inputs.rows() >= 1, ErrorCode::kPrecondition, "no training rows");
  Require(params.max_bins <= 65536, ErrorCode::kInvalidArgument, "max_bins must be <= 65536");
  const auto n = static_cast<size_t>(inputs.rows());
  const BinnedInputs binned = BinInputs(inputs, params.max_bins);

  BoostedState state;
  state.task = task;
  std::vector<Eigen::Index> target_columns;
  if (task == data::Task::kRegression) {
    for (Eigen::Index c = 0; c < targets.cols(); ++c) target_columns.push_back(c);
  } else {
    state.classes = static_cast<int>(targets.cols());
    if (state.classes == 2) {
      target_columns.push_back(1);
    } else {
      for (Eigen::Index c = 0; c < targets.cols(); ++c) target_columns.push_back(c);
    }
  }
  const bool logistic = task == data::Task::kClassification;

  std::vector<double> round_loss(static_cast<size_t>(params.n_rounds), 0.0);
  BoostedTreeGrower grower(params, binned, n);
  std::vector<double> y(n), margin(n), grad(n), hess(n);
  for (Eigen::Index col : target_columns) {
    for (size_t i = 0; i < n; ++i) y[i] = targets(static_cast<Eigen::Index>(i), col);
    BoostedEnsemble ensemble;
    double mean = 0.0;
    for (double v : y) mean += v;
    mean /= static_cast<double>(n);
    if (logistic) {
      const double p = std::clamp(mean, 1e-6, 1.0 - 1e-6);
      ensemble.base_score = std::log(p / (1.0 - p));
    } else {
      ensemble.base_score = mean;
    }
    std::fill(margin.begin(), margin.end(), ensemble.base_score);

    for (int round = 0; round < params.n_rounds; ++round) {
      for (size_t i = 0; i < n; ++i) {
        if (logistic) {
          const double p = Sigmoid(margin[i]);
          grad[i] = p - y[i];
          hess[i] = std::max(p * (1.0 - p), 1e-16);
        } else {
          grad[i] = margin[i] - y[i];
          hess[i] = 1.0;
        }
      }
      ensemble.trees.push_back(grower.Grow(grad, hess, margin));

      double loss = 0.0;
      for (size_t i = 0; i < n; ++i) {
        if (logistic) {
          // log(1 + e^m) - y m, stable for large |m|
          const double m = margin[i];
          loss += (m > 0 ? m + std::log1p(std::exp(-m)) : std::log1p(std::exp(m))) - y[i] * m;
        } else {
          const double d = margin[i] - y[i];
          loss += d * d;
        }
      }
      round_loss[static_cast<size_t>(round)] +=
          loss / static_cast<double>(n) / static_cast<double>(target_columns.size());
    }
    state.ensembles.push_back(std::move(ensemble));
  }
  if (history) *history = round_loss;
  return state;
}

Matrix PredictBoosted(const BoostedState& state, const Matrix& inputs) {
  const bool classification = state.task == data::Task::kClassification;
  const Eigen::Index out_cols =
      classification ? state.classes : static_cast<Eigen::Index>(state.ensembles.size());
  Matrix out(inputs.rows(), out_cols);
  for (Eigen::Index r = 0; r < inputs.rows(); ++r) {
    const double* row = inputs.data() + r * inputs.cols();
    if (!classification) {
      for (size_t e = 0; e < state.ensembles.size(); ++e) {
        out(r, static_cast<Eigen::Index>(e)) = state.ensembles[e].Margin(row);
      }
    } else if (state.classes == 2) {
      const double p = Sigmoid(state.ensembles.front().Margin(row));
      out(r, 0) = 1.0 - p;
      out(r, 1) = p;
    } else {
      double total = 0.0;
      for (size_t e = 0; e < state.ensembles.size(); ++e) {
        const double p = Sigmoid(state.ensembles[e].Margin(row));
        out(r, static_cast<Eigen::Index>(e)) = p;
        total += p;
      }
      out.row(r) /= total;
    }
  }
  return out;
}

}  // namespace tabsense::models
