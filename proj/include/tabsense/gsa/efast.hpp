#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "tabsense/core/matrix.hpp"
#include "tabsense/data/table.hpp"
#include "tabsense/models/model.hpp"

namespace tabsense::gsa {

struct EfastConfig {
  // Points per search curve; odd and at least 4M^2 + 1.
  int samples = 65;
  // Harmonics of the frequency of interest summed into the first-order term.
  int interference = 4;
  uint64_t seed = 0;
};

void ValidateConfig(const EfastConfig& config);

// Frequency assigned to the feature of interest: floor((N - 1) / (2M)).
int MaxFrequency(const EfastConfig& config);

struct EfastDesign {
  size_t dims = 0;
  int samples = 0;
  int interference = 0;
  // frequencies[i][j]: frequency of feature j on the curve for feature i.
  std::vector<std::vector<int>> frequencies;
  // unit_points[i]: N x dims curve in [0, 1]^dims.
  std::vector<Matrix> unit_points;
};

EfastDesign MakeEfastDesign(const EfastConfig& config, size_t dims);

// Maps unit points onto per-column [lo, hi].
Matrix ScaleToBounds(const Matrix& unit, const std::vector<std::pair<double, double>>& bounds);

struct CurveIndices {
  double s1 = 0.0;
  double st = 0.0;
  double variance = 0.0;
};

// Indices from the N model outputs along one curve whose feature of interest
// has frequency `omega`. Variance is zero for a constant output.
CurveIndices AnalyzeCurve(const std::vector<double>& outputs, int omega, int interference);

struct SobolIndex {
  std::string input;
  double s1 = 0.0;
  double st = 0.0;
};

struct OutputIndices {
  std::string output;
  std::vector<SobolIndex> indices;
  // Mean over curves of the spectral output variance.
  double total_variance = 0.0;
};

struct SobolResult {
  std::vector<OutputIndices> outputs;
  std::vector<std::string> warnings;
};

// Model over a batch of input rows, one output column per analyzed output.
using BatchFunction = std::function<Matrix(const Matrix&)>;

// eFAST over independent uniform inputs on the given bounds. Inputs with
// lo == hi are held constant and get zero indices.
SobolResult RunEfast(const BatchFunction& function,
                     const std::vector<std::pair<double, double>>& bounds,
                     const std::vector<std::string>& input_names,
                     const std::vector<std::string>& output_names, const EfastConfig& config);

// Bounds are the per-column range of the split. Classification analyzes the
// positive-class probability (binary) or every class probability.
SobolResult RunGsa(const models::TrainedModel& model, const data::DataTable& table,
                   data::Split split, const EfastConfig& config = {});

// Columns: input,output,s1,st.
std::string SobolCsv(const SobolResult& result);

}  // namespace tabsense::gsa
