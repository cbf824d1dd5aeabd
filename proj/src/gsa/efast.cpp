#include "tabsense/gsa/efast.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "tabsense/core/error.hpp"
#include "tabsense/core/format.hpp"
#include "tabsense/core/random.hpp"
#include "tabsense/data/correlation.hpp"

namespace tabsense::gsa {

void ValidateConfig(const EfastConfig& config) {
  Require(config.interference >= 1, ErrorCode::kInvalidArgument,
          "interference factor must be at least 1");
  const long long minimum = 4LL * config.interference * config.interference + 1;
  Require(config.samples >= minimum, ErrorCode::kInvalidArgument,
          "samples per curve must be at least 4M^2+1 = " + std::to_string(minimum));
  Require(config.samples % 2 == 1, ErrorCode::kInvalidArgument, "samples per curve must be odd");
}

int MaxFrequency(const EfastConfig& config) {
  return (config.samples - 1) / (2 * config.interference);
}

EfastDesign MakeEfastDesign(const EfastConfig& config, size_t dims) {
  ValidateConfig(config);
  Require(dims > 0, ErrorCode::kInvalidArgument, "eFAST needs at least one input");
  EfastDesign design;
  design.dims = dims;
  design.samples = config.samples;
  design.interference = config.interference;

  const int omega = MaxFrequency(config);
  const int complementary = std::max(1, omega / (2 * config.interference));
  const int n = config.samples;
  Rng rng(config.seed);

  // Spread evenly over 1..complementary when there are enough distinct
  // values, otherwise cycle through them.
  const size_t others = dims - 1;
  std::vector<int> spread(others);
  for (size_t slot = 0; slot < others; ++slot) {
    if (static_cast<size_t>(complementary) >= others && others > 1) {
      spread[slot] = 1 + static_cast<int>(std::floor(static_cast<double>(slot) * (complementary - 1) /
                                                     static_cast<double>(others - 1)));
    } else {
      spread[slot] = static_cast<int>(slot % static_cast<size_t>(complementary)) + 1;
    }
  }

  for (size_t i = 0; i < dims; ++i) {
    std::vector<int> freq(dims);
    size_t slot = 0;
    for (size_t j = 0; j < dims; ++j) freq[j] = j == i ? omega : spread[slot++];
    Matrix unit(n, static_cast<Eigen::Index>(dims));
    for (size_t j = 0; j < dims; ++j) {
      const double phase = 2.0 * std::numbers::pi * rng.Uniform();
      for (int k = 0; k < n; ++k) {
        const double s = 2.0 * std::numbers::pi * k / n;
        const double x = 0.5 + std::asin(std::sin(freq[j] * s + phase)) / std::numbers::pi;
        unit(k, static_cast<Eigen::Index>(j)) = std::clamp(x, 0.0, 1.0);
      }
    }
    design.frequencies.push_back(std::move(freq));
    design.unit_points.push_back(std::move(unit));
  }
  return design;
}

Matrix ScaleToBounds(const Matrix& unit, const std::vector<std::pair<double, double>>& bounds) {
  Require(static_cast<size_t>(unit.cols()) == bounds.size(), ErrorCode::kInvalidArgument,
          "bounds do not match the design width");
  Matrix out(unit.rows(), unit.cols());
  for (Eigen::Index c = 0; c < unit.cols(); ++c) {
    const auto [lo, hi] = bounds[static_cast<size_t>(c)];
    out.col(c) = (lo + (hi - lo) * unit.col(c).array()).matrix();
  }
  return out;
}

CurveIndices AnalyzeCurve(const std::vector<double>& outputs, int omega, int interference) {
  const int n = static_cast<int>(outputs.size());
  const int harmonics = (n - 1) / 2;
  std::vector<double> spectrum(static_cast<size_t>(harmonics) + 1, 0.0);
  for (int k = 1; k <= harmonics; ++k) {
    double a = 0.0;
    double b = 0.0;
    for (int j = 0; j < n; ++j) {
      const double s = 2.0 * std::numbers::pi * j / n;
      a += outputs[static_cast<size_t>(j)] * std::cos(k * s);
      b += outputs[static_cast<size_t>(j)] * std::sin(k * s);
    }
    a *= 2.0 / n;
    b *= 2.0 / n;
    spectrum[static_cast<size_t>(k)] = a * a + b * b;
  }

  double total = 0.0;
  for (int k = 1; k <= harmonics; ++k) total += spectrum[static_cast<size_t>(k)];
  double first = 0.0;
  for (int p = 1; p <= interference && p * omega <= harmonics; ++p) {
    first += spectrum[static_cast<size_t>(p * omega)];
  }
  double complement = 0.0;
  for (int k = 1; k <= omega / 2; ++k) complement += spectrum[static_cast<size_t>(k)];

  CurveIndices out;
  // A sinusoid of amplitude a has variance a^2 / 2.
  out.variance = total / 2.0;
  double mean_square = 0.0;
  for (double y : outputs) mean_square += y * y;
  mean_square /= std::max(1, n);
  if (!(total > 1e-24 * std::max(1.0, mean_square))) {
    out.variance = 0.0;
    return out;
  }
  out.s1 = first / total;
  out.st = 1.0 - complement / total;
  return out;
}

SobolResult RunEfast(const BatchFunction& function,
                     const std::vector<std::pair<double, double>>& bounds,
                     const std::vector<std::string>& input_names,
                     const std::vector<std::string>& output_names, const EfastConfig& config) {
  ValidateConfig(config);
  const size_t d = bounds.size();
  Require(d > 0, ErrorCode::kInvalidArgument, "eFAST needs at least one input");
  Require(input_names.size() == d, ErrorCode::kInvalidArgument, "one name per input required");
  for (const auto& [lo, hi] : bounds) {
    Require(std::isfinite(lo) && std::isfinite(hi) && lo <= hi, ErrorCode::kInvalidArgument,
            "bounds must be finite with lo <= hi");
  }

  std::vector<size_t> active;
  for (size_t j = 0; j < d; ++j) {
    if (bounds[j].first < bounds[j].second) active.push_back(j);
  }

  SobolResult result;
  for (const auto& name : output_names) {
    OutputIndices out;
    out.output = name;
    for (const auto& input : input_names) out.indices.push_back({input, 0.0, 0.0});
    result.outputs.push_back(std::move(out));
  }
  for (size_t j = 0; j < d; ++j) {
    if (bounds[j].first == bounds[j].second) {
      result.warnings.push_back("input '" + input_names[j] +
                                "' is constant on the analyzed rows; indices set to 0");
    }
  }
  if (active.empty()) {
    result.warnings.push_back("no input varies; all indices are 0");
    return result;
  }

  const EfastDesign design = MakeEfastDesign(config, active.size());
  std::vector<std::pair<double, double>> active_bounds;
  for (size_t j : active) active_bounds.push_back(bounds[j]);

  const int n = config.samples;
  const Eigen::Index curves = static_cast<Eigen::Index>(active.size());
  Matrix batch(curves * n, static_cast<Eigen::Index>(d));
  for (size_t j = 0; j < d; ++j) batch.col(static_cast<Eigen::Index>(j)).setConstant(bounds[j].first);
  for (Eigen::Index i = 0; i < curves; ++i) {
    const Matrix scaled = ScaleToBounds(design.unit_points[static_cast<size_t>(i)], active_bounds);
    for (size_t a = 0; a < active.size(); ++a) {
      batch.block(i * n, static_cast<Eigen::Index>(active[a]), n, 1) =
          scaled.col(static_cast<Eigen::Index>(a));
    }
  }
  const Matrix y = function(batch);
  Require(y.rows() == batch.rows() && static_cast<size_t>(y.cols()) == output_names.size(),
          ErrorCode::kInvalidArgument, "model output shape does not match the analyzed outputs");
  for (Eigen::Index r = 0; r < y.rows(); ++r) {
    Require(y.row(r).allFinite(), ErrorCode::kDomain, "model produced a non-finite output");
  }

  const int omega = MaxFrequency(config);
  for (size_t o = 0; o < output_names.size(); ++o) {
    auto& out = result.outputs[o];
    bool constant = false;
    double variance = 0.0;
    for (Eigen::Index i = 0; i < curves; ++i) {
      std::vector<double> values(static_cast<size_t>(n));
      for (int k = 0; k < n; ++k) values[static_cast<size_t>(k)] = y(i * n + k, static_cast<Eigen::Index>(o));
      const CurveIndices ci = AnalyzeCurve(values, omega, config.interference);
      if (ci.variance == 0.0) constant = true;
      variance += ci.variance;
      auto& entry = out.indices[active[static_cast<size_t>(i)]];
      entry.s1 = ci.s1;
      entry.st = ci.st;
    }
    out.total_variance = variance / static_cast<double>(curves);
    if (constant) {
      for (auto& entry : out.indices) entry.s1 = entry.st = 0.0;
      out.total_variance = 0.0;
      result.warnings.push_back("output '" + out.output +
                                "' has zero variance over the design; indices set to 0");
    }
  }
  return result;
}

SobolResult RunGsa(const models::TrainedModel& model, const data::DataTable& table,
                   data::Split split, const EfastConfig& config) {
  const data::EncodedDataset encoded = models::EncodeForModel(model, table);
  const std::vector<size_t> rows = encoded.RowsIn(split);
  Require(!rows.empty(), ErrorCode::kPrecondition,
          "split '" + std::string(data::SplitName(split)) + "' has no rows");
  const Matrix x = data::SelectRows(encoded.inputs.values, rows);

  std::vector<std::pair<double, double>> bounds;
  for (Eigen::Index c = 0; c < x.cols(); ++c) bounds.emplace_back(x.col(c).minCoeff(), x.col(c).maxCoeff());

  const auto& out_names = model.fingerprint.output_columns;
  std::vector<Eigen::Index> out_cols;
  if (model.spec.task == data::Task::kClassification && out_names.size() == 2) {
    out_cols.push_back(1);
  } else {
    for (size_t c = 0; c < out_names.size(); ++c) out_cols.push_back(static_cast<Eigen::Index>(c));
  }
  std::vector<std::string> analyzed;
  for (auto c : out_cols) analyzed.push_back(out_names[static_cast<size_t>(c)]);

  const BatchFunction f = [&](const Matrix& batch) {
    const Matrix p = model.PredictRaw(batch);
    Matrix out(p.rows(), static_cast<Eigen::Index>(out_cols.size()));
    for (size_t c = 0; c < out_cols.size(); ++c) out.col(static_cast<Eigen::Index>(c)) = p.col(out_cols[c]);
    return out;
  };
  SobolResult result = RunEfast(f, bounds, model.fingerprint.input_columns, analyzed, config);

  if (x.rows() >= 2) {
    const auto corr = data::CheckCorrelation(x, model.fingerprint.input_columns);
    for (const auto& pair : corr.pairs) {
      result.warnings.push_back("inputs '" + pair.first + "' and '" + pair.second +
                                "' are correlated (r = " + FormatDouble(pair.pearson_r) +
                                "); their indices may split the shared effect");
    }
  }
  return result;
}

std::string SobolCsv(const SobolResult& result) {
  std::ostringstream out;
  out << "input,output,s1,st\n";
  for (const auto& output : result.outputs) {
    for (const auto& idx : output.indices) {
      out << CsvField(idx.input) << ',' << CsvField(output.output) << ',' << FormatDouble(idx.s1)
          << ',' << FormatDouble(idx.st) << '\n';
    }
  }
  return out.str();
}

}  // namespace tabsense::gsa
