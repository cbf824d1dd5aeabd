#include "tabsense/data/pca.hpp"

#include <Eigen/Eigenvalues>

#include "tabsense/core/error.hpp"

namespace tabsense::data {

std::vector<std::string> PcaModel::ComponentNames() const {
  std::vector<std::string> names;
  for (size_t k = 0; k < retained; ++k) names.push_back("pc" + std::to_string(k + 1));
  return names;
}

Matrix PcaModel::TransformAll(const Matrix& values) const {
  Require(values.cols() == mean.size(), ErrorCode::kInvalidArgument, "PCA column count mismatch");
  return (values.rowwise() - mean.transpose()) * loadings;
}

Matrix PcaModel::Transform(const Matrix& values) const {
  return TransformAll(values).leftCols(static_cast<Eigen::Index>(retained));
}

Matrix PcaModel::InverseTransformAll(const Matrix& scores) const {
  Require(scores.cols() == loadings.cols(), ErrorCode::kInvalidArgument,
          "inverse PCA needs scores on all components");
  return (scores * loadings.transpose()).rowwise() + mean.transpose();
}

double PcaModel::ExplainedFraction(size_t components) const {
  const double total = eigenvalues.sum();
  if (total <= 0.0) return 1.0;
  return eigenvalues.head(static_cast<Eigen::Index>(components)).sum() / total;
}

PcaModel FitPca(const Matrix& train_values, double variance_kept) {
  Require(train_values.rows() >= 2, ErrorCode::kPrecondition, "PCA needs at least 2 rows");
  Require(variance_kept > 0.0 && variance_kept <= 1.0, ErrorCode::kInvalidArgument,
          "variance_kept must lie in (0, 1]");
  PcaModel model;
  model.mean = train_values.colwise().mean().transpose();
  const Matrix centered = train_values.rowwise() - model.mean.transpose();
  const Matrix cov = (centered.transpose() * centered) / static_cast<double>(train_values.rows() - 1);

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
  Require(solver.info() == Eigen::Success, ErrorCode::kDomain, "PCA eigen decomposition failed");
  const Eigen::Index d = cov.rows();
  model.eigenvalues.resize(d);
  model.loadings.resize(d, d);
  // Eigen sorts ascending; reverse, clamp round-off negatives, fix signs so
  // the largest-magnitude loading of each component is positive.
  for (Eigen::Index k = 0; k < d; ++k) {
    const Eigen::Index src = d - 1 - k;
    model.eigenvalues(k) = std::max(0.0, solver.eigenvalues()(src));
    Vector v = solver.eigenvectors().col(src);
    Eigen::Index arg = 0;
    v.cwiseAbs().maxCoeff(&arg);
    if (v(arg) < 0) v = -v;
    model.loadings.col(k) = v;
  }
  model.retained = static_cast<size_t>(d);
  for (Eigen::Index k = 1; k <= d; ++k) {
    if (model.ExplainedFraction(static_cast<size_t>(k)) >= variance_kept - 1e-12) {
      model.retained = static_cast<size_t>(k);
      break;
    }
  }
  return model;
}

EncodedDataset ApplyPca(const EncodedDataset& dataset, const PcaModel& pca) {
  EncodedDataset out = dataset;
  out.inputs.values = pca.Transform(dataset.inputs.values);
  out.inputs.column_names = pca.ComponentNames();
  out.inputs.group_map.clear();
  out.input_features.clear();
  for (size_t k = 0; k < pca.retained; ++k) {
    out.inputs.group_map.push_back(k);
    FeatureSpec spec;
    spec.name = out.inputs.column_names[k];
    spec.kind = FeatureKind::kNumeric;
    spec.role = FeatureRole::kInput;
    out.input_features.push_back(std::move(spec));
  }
  return out;
}

}  // namespace tabsense::data
