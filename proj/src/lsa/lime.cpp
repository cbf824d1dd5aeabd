#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "tabsense/core/error.hpp"
#include "tabsense/core/format.hpp"
#include "tabsense/core/random.hpp"
#include "tabsense/lsa/explain.hpp"

namespace tabsense::lsa {

namespace {

double Percentile(const std::vector<double>& sorted, double q) {
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<size_t>(std::floor(pos));
  const size_t hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] + (sorted[hi] - sorted[lo]) * frac;
}

struct Bin {
  double lower = 0.0;
  double upper = 0.0;
  double mean = 0.0;
  double stddev = 0.0;
};

// Sampling state of one explained feature.
struct GroupSampler {
  bool numeric = true;
  size_t column = 0;
  std::vector<double> cuts;
  std::vector<Bin> bins;
  std::vector<size_t> nonempty;
  size_t instance_bin = 0;
  // Categorical: cumulative train frequency per category (group column).
  std::vector<double> cumulative;
  size_t instance_category = 0;
};

size_t BinOf(const std::vector<double>& cuts, double v) {
  return static_cast<size_t>(std::count_if(cuts.begin(), cuts.end(), [&](double c) { return c < v; }));
}

size_t HotColumn(const Vector& row, const std::vector<size_t>& columns) {
  size_t best = 0;
  for (size_t k = 1; k < columns.size(); ++k) {
    if (row(static_cast<Eigen::Index>(columns[k])) > row(static_cast<Eigen::Index>(columns[best]))) best = k;
  }
  return best;
}

GroupSampler MakeSampler(const Matrix& train, const data::FeatureGroup& group, const Vector& instance) {
  GroupSampler s;
  if (group.kind == data::FeatureKind::kCategorical && group.columns.size() > 1) {
    s.numeric = false;
    std::vector<double> counts(group.columns.size(), 0.0);
    for (Eigen::Index r = 0; r < train.rows(); ++r) counts[HotColumn(train.row(r), group.columns)] += 1.0;
    double total = 0.0;
    for (double c : counts) {
      total += c;
      s.cumulative.push_back(total);
    }
    for (double& c : s.cumulative) c /= total;
    s.instance_category = HotColumn(instance, group.columns);
    return s;
  }
  s.column = group.columns.front();
  const auto col = static_cast<Eigen::Index>(s.column);
  std::vector<double> values(static_cast<size_t>(train.rows()));
  for (Eigen::Index r = 0; r < train.rows(); ++r) values[static_cast<size_t>(r)] = train(r, col);
  s.cuts = QuartileEdges(values);
  const double lo = *std::min_element(values.begin(), values.end());
  const double hi = *std::max_element(values.begin(), values.end());
  const size_t nbins = s.cuts.size() + 1;
  std::vector<std::vector<double>> members(nbins);
  for (double v : values) members[BinOf(s.cuts, v)].push_back(v);
  s.bins.resize(nbins);
  for (size_t b = 0; b < nbins; ++b) {
    Bin& bin = s.bins[b];
    bin.lower = b == 0 ? lo : s.cuts[b - 1];
    bin.upper = b + 1 == nbins ? hi : s.cuts[b];
    if (members[b].empty()) continue;
    s.nonempty.push_back(b);
    bin.mean = std::accumulate(members[b].begin(), members[b].end(), 0.0) /
               static_cast<double>(members[b].size());
    double var = 0.0;
    for (double v : members[b]) var += (v - bin.mean) * (v - bin.mean);
    bin.stddev = std::sqrt(var / static_cast<double>(members[b].size()));
  }
  s.instance_bin = BinOf(s.cuts, instance(col));
  return s;
}

double TruncatedNormal(Rng& rng, const Bin& bin) {
  if (bin.stddev <= 0.0 || bin.upper <= bin.lower) return bin.mean;
  for (int attempt = 0; attempt < 64; ++attempt) {
    const double x = bin.mean + bin.stddev * rng.Normal();
    if (x >= bin.lower && x <= bin.upper) return x;
  }
  return rng.Uniform(bin.lower, bin.upper);
}

std::string Condition(const std::string& name, const GroupSampler& s) {
  const size_t b = s.instance_bin;
  const size_t last = s.cuts.size();
  if (last == 0) return name;
  if (b == 0) return name + " <= " + FormatDouble(s.cuts[0]);
  if (b == last) return FormatDouble(s.cuts[last - 1]) + " < " + name;
  return FormatDouble(s.cuts[b - 1]) + " < " + name + " <= " + FormatDouble(s.cuts[b]);
}

}  // namespace

std::vector<double> QuartileEdges(const std::vector<double>& values) {
  Require(!values.empty(), ErrorCode::kPrecondition, "quartiles need at least one value");
  std::vector<double> sorted = values;
  std::sort(sorted.begin(), sorted.end());
  std::vector<double> edges;
  for (double q : {0.25, 0.5, 0.75}) {
    const double e = Percentile(sorted, q);
    if (edges.empty() || e > edges.back()) edges.push_back(e);
  }
  // A cut at the maximum would leave an empty top bin.
  while (!edges.empty() && edges.back() >= sorted.back()) edges.pop_back();
  return edges;
}

LimeResult Lime(const ExplainContext& context, const LimeConfig& config) {
  Require(config.num_samples >= 100, ErrorCode::kInvalidArgument, "LIME needs at least 100 samples");
  Require(config.num_features >= 1, ErrorCode::kInvalidArgument, "LIME needs num_features >= 1");
  Require(config.ridge >= 0.0, ErrorCode::kInvalidArgument, "ridge strength must be nonnegative");
  Require(context.train.rows() > 0, ErrorCode::kPrecondition, "LIME needs train rows");
  const size_t d = context.groups.size();
  Require(d > 0, ErrorCode::kPrecondition, "nothing to explain");
  const double width = config.kernel_width.value_or(0.75 * std::sqrt(static_cast<double>(d)));
  Require(width > 0.0, ErrorCode::kInvalidArgument, "kernel width must be positive");

  std::vector<GroupSampler> samplers;
  for (const auto& g : context.groups) samplers.push_back(MakeSampler(context.train, g, context.instance));

  const auto n = static_cast<Eigen::Index>(config.num_samples);
  const auto dz = static_cast<Eigen::Index>(d);
  Matrix rows(n, context.instance.size());
  Matrix z = Matrix::Ones(n, dz);
  Rng rng(config.seed);
  for (Eigen::Index r = 0; r < n; ++r) {
    rows.row(r) = context.instance.transpose();
    // Row 0 is the instance itself.
    if (r == 0) continue;
    for (size_t g = 0; g < d; ++g) {
      const GroupSampler& s = samplers[g];
      const auto& cols = context.groups[g].columns;
      if (s.numeric) {
        const size_t b = s.nonempty[rng.Index(s.nonempty.size())];
        rows(r, static_cast<Eigen::Index>(s.column)) = TruncatedNormal(rng, s.bins[b]);
        z(r, static_cast<Eigen::Index>(g)) = b == s.instance_bin ? 1.0 : 0.0;
      } else {
        const double u = rng.Uniform();
        size_t k = 0;
        while (k + 1 < s.cumulative.size() && u >= s.cumulative[k]) ++k;
        for (size_t c = 0; c < cols.size(); ++c) {
          rows(r, static_cast<Eigen::Index>(cols[c])) = c == k ? 1.0 : 0.0;
        }
        z(r, static_cast<Eigen::Index>(g)) = k == s.instance_category ? 1.0 : 0.0;
      }
    }
  }

  const Vector y = context.function(rows);
  Require(y.size() == n, ErrorCode::kInvalidArgument, "model returned the wrong number of outputs");
  Vector w(n);
  for (Eigen::Index r = 0; r < n; ++r) {
    const double dist2 = static_cast<double>(dz) - z.row(r).sum();
    w(r) = std::exp(-dist2 / (width * width));
  }
  const double wsum = w.sum();
  const double y_mean = w.dot(y) / wsum;
  const Eigen::RowVectorXd z_mean = (w.transpose() * z) / wsum;

  LimeResult result;
  result.all_coefficients.assign(d, 0.0);
  const double y_var = w.dot((y.array() - y_mean).square().matrix()) / wsum;
  if (!(y_var > 1e-24 * std::max(1.0, y_mean * y_mean))) {
    result.warnings.push_back("model output is constant over the neighborhood; attributions are 0");
    result.intercept = y_mean;
    result.local_prediction = y_mean;
  } else {
    const Matrix zc = z.rowwise() - z_mean;
    const Vector yc = y.array() - y_mean;
    Matrix gram = zc.transpose() * w.asDiagonal() * zc;
    gram.diagonal().array() += config.ridge;
    const Vector rhs = zc.transpose() * w.asDiagonal() * yc;
    const Vector beta = gram.ldlt().solve(rhs);
    result.intercept = y_mean - z_mean.dot(beta);
    result.local_prediction = result.intercept + beta.sum();
    for (size_t g = 0; g < d; ++g) result.all_coefficients[g] = beta(static_cast<Eigen::Index>(g));
    const Vector fitted = (z * beta).array() + result.intercept;
    const double ss_res = w.dot((y - fitted).array().square().matrix());
    const double ss_tot = w.dot(yc.array().square().matrix());
    result.score = 1.0 - ss_res / ss_tot;
  }

  std::vector<size_t> order(d);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](size_t a, size_t b) {
    return std::abs(result.all_coefficients[a]) > std::abs(result.all_coefficients[b]);
  });
  const size_t k = std::min(d, static_cast<size_t>(config.num_features));
  for (size_t i = 0; i < k; ++i) {
    const size_t g = order[i];
    const GroupSampler& s = samplers[g];
    LimeFeature f;
    f.group = g;
    f.coefficient = result.all_coefficients[g];
    if (s.numeric) {
      f.lower = s.bins[s.instance_bin].lower;
      f.upper = s.bins[s.instance_bin].upper;
      f.condition = Condition(context.groups[g].name, s);
    } else {
      f.lower = f.upper = std::numeric_limits<double>::quiet_NaN();
      const auto& cats = context.groups[g].categories;
      f.condition = context.groups[g].name + " = " +
                    (s.instance_category < cats.size() ? cats[s.instance_category] : "?");
    }
    result.features.push_back(f);
  }
  return result;
}

}  // namespace tabsense::lsa
