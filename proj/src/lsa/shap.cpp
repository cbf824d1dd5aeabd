#include <algorithm>
#include <cmath>
#include <numeric>

#include "tabsense/core/error.hpp"
#include "tabsense/core/random.hpp"
#include "tabsense/lsa/explain.hpp"

namespace tabsense::lsa {

namespace {

// Rows evaluated per model call while marginalizing coalitions.
constexpr Eigen::Index kBatchRows = 1 << 16;

Matrix SampleBackground(const Matrix& train, int size, uint64_t seed) {
  const auto n = static_cast<size_t>(train.rows());
  std::vector<size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  const size_t m = std::min(n, static_cast<size_t>(size));
  if (m < n) {
    Rng rng(seed);
    rng.Shuffle(idx);
    idx.resize(m);
    std::sort(idx.begin(), idx.end());
  }
  Matrix bg(static_cast<Eigen::Index>(m), train.cols());
  for (size_t i = 0; i < m; ++i) bg.row(static_cast<Eigen::Index>(i)) = train.row(static_cast<Eigen::Index>(idx[i]));
  return bg;
}

// v(S) for each coalition: the mean output over the background with the
// coalition's columns taken from the instance.
std::vector<double> CoalitionValues(const ExplainContext& context, const Matrix& background,
                                    const std::vector<std::vector<bool>>& coalitions) {
  const Eigen::Index nb = background.rows();
  const Eigen::Index per_batch = std::max<Eigen::Index>(1, kBatchRows / nb);
  std::vector<double> values(coalitions.size(), 0.0);
  for (size_t start = 0; start < coalitions.size(); start += static_cast<size_t>(per_batch)) {
    const size_t end = std::min(coalitions.size(), start + static_cast<size_t>(per_batch));
    Matrix rows(static_cast<Eigen::Index>(end - start) * nb, background.cols());
    for (size_t c = start; c < end; ++c) {
      auto block = rows.middleRows(static_cast<Eigen::Index>(c - start) * nb, nb);
      block = background;
      for (size_t g = 0; g < context.groups.size(); ++g) {
        if (!coalitions[c][g]) continue;
        for (size_t col : context.groups[g].columns) {
          block.col(static_cast<Eigen::Index>(col)).setConstant(context.instance(static_cast<Eigen::Index>(col)));
        }
      }
    }
    const Vector out = context.function(rows);
    Require(out.size() == rows.rows(), ErrorCode::kInvalidArgument,
            "model returned the wrong number of outputs");
    for (size_t c = start; c < end; ++c) {
      values[c] = out.segment(static_cast<Eigen::Index>(c - start) * nb, nb).mean();
    }
  }
  return values;
}

std::vector<bool> MaskBits(uint64_t mask, size_t d) {
  std::vector<bool> bits(d);
  for (size_t g = 0; g < d; ++g) bits[g] = (mask >> g) & 1U;
  return bits;
}

ShapResult ExactShap(const ExplainContext& context, const Matrix& background) {
  const size_t d = context.groups.size();
  const uint64_t total = uint64_t{1} << d;
  std::vector<std::vector<bool>> coalitions;
  coalitions.reserve(total);
  for (uint64_t m = 0; m < total; ++m) coalitions.push_back(MaskBits(m, d));
  const std::vector<double> v = CoalitionValues(context, background, coalitions);

  // weight[s] = s! (d - s - 1)! / d!
  std::vector<double> weight(d);
  for (size_t s = 0; s < d; ++s) {
    double w = 1.0 / static_cast<double>(d);
    for (size_t k = 1; k <= s; ++k) w *= static_cast<double>(k) / static_cast<double>(d - s - 1 + k);
    weight[s] = w;
  }

  ShapResult result;
  result.exact = true;
  result.phi.assign(d, 0.0);
  for (uint64_t m = 0; m < total; ++m) {
    const auto size = static_cast<size_t>(__builtin_popcountll(m));
    for (size_t g = 0; g < d; ++g) {
      if ((m >> g) & 1U) continue;
      result.phi[g] += weight[size] * (v[m | (uint64_t{1} << g)] - v[m]);
    }
  }
  result.base_value = v.front();
  return result;
}

ShapResult SampledShap(const ExplainContext& context, const Matrix& background, const ShapConfig& config,
                       double prediction) {
  const size_t d = context.groups.size();
  Rng rng(config.seed ^ 0x5DEECE66DULL);
  std::vector<double> size_cdf;
  double acc = 0.0;
  for (size_t s = 1; s < d; ++s) {
    acc += static_cast<double>(d - 1) / (static_cast<double>(s) * static_cast<double>(d - s));
    size_cdf.push_back(acc);
  }
  for (double& c : size_cdf) c /= acc;

  const size_t pairs = std::max<size_t>(1, static_cast<size_t>(config.num_coalitions) / 2);
  std::vector<std::vector<bool>> coalitions;
  coalitions.push_back(std::vector<bool>(d, false));
  std::vector<size_t> players(d);
  std::iota(players.begin(), players.end(), 0);
  for (size_t p = 0; p < pairs; ++p) {
    const double u = rng.Uniform();
    size_t s = 1;
    while (s < d - 1 && u >= size_cdf[s - 1]) ++s;
    rng.Shuffle(players);
    std::vector<bool> z(d, false);
    for (size_t i = 0; i < s; ++i) z[players[i]] = true;
    std::vector<bool> complement(d);
    for (size_t g = 0; g < d; ++g) complement[g] = !z[g];
    coalitions.push_back(std::move(z));
    coalitions.push_back(std::move(complement));
  }
  const std::vector<double> v = CoalitionValues(context, background, coalitions);

  ShapResult result;
  result.exact = false;
  result.base_value = v.front();
  const double delta = prediction - result.base_value;
  // Sizes are drawn from the Shapley kernel, so every sampled coalition has
  // equal regression weight. The last player absorbs the efficiency
  // constraint.
  const auto rows = static_cast<Eigen::Index>(coalitions.size() - 1);
  const auto cols = static_cast<Eigen::Index>(d - 1);
  Matrix a(rows, cols);
  Vector t(rows);
  for (Eigen::Index r = 0; r < rows; ++r) {
    const auto& z = coalitions[static_cast<size_t>(r) + 1];
    const double last = z[d - 1] ? 1.0 : 0.0;
    for (Eigen::Index c = 0; c < cols; ++c) a(r, c) = (z[static_cast<size_t>(c)] ? 1.0 : 0.0) - last;
    t(r) = v[static_cast<size_t>(r) + 1] - result.base_value - last * delta;
  }
  const Vector phi = a.completeOrthogonalDecomposition().solve(t);
  result.phi.assign(d, 0.0);
  double sum = 0.0;
  for (Eigen::Index c = 0; c < cols; ++c) {
    result.phi[static_cast<size_t>(c)] = phi(c);
    sum += phi(c);
  }
  result.phi[d - 1] = delta - sum;
  return result;
}

}  // namespace

ShapResult KernelShap(const ExplainContext& context, const ShapConfig& config) {
  Require(config.background_size >= 1, ErrorCode::kInvalidArgument, "background size must be >= 1");
  Require(config.max_exact_dim >= 0 && config.max_exact_dim <= 20, ErrorCode::kInvalidArgument,
          "max_exact_dim must lie in [0, 20]");
  Require(config.num_coalitions >= 2, ErrorCode::kInvalidArgument, "num_coalitions must be >= 2");
  Require(context.train.rows() > 0, ErrorCode::kPrecondition, "SHAP background is empty");
  const size_t d = context.groups.size();
  Require(d > 0, ErrorCode::kPrecondition, "nothing to explain");

  const Matrix background = SampleBackground(context.train, config.background_size, config.seed);
  const double prediction = context.function(context.instance.transpose())(0);
  ShapResult result = d <= static_cast<size_t>(config.max_exact_dim) || d == 1
                          ? ExactShap(context, background)
                          : SampledShap(context, background, config, prediction);
  result.prediction = prediction;
  return result;
}

}  // namespace tabsense::lsa
