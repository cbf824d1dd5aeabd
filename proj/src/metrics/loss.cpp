#include "tabsense/metrics/loss.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "tabsense/core/error.hpp"

namespace tabsense::metrics {

namespace {

constexpr double kProbEps = 1e-12;

struct NamedLoss {
  LossKind kind;
  std::string_view name;
};

constexpr NamedLoss kLosses[] = {
    {LossKind::kMae, "mae"},
    {LossKind::kMse, "mse"},
    {LossKind::kRmse, "rmse"},
    {LossKind::kMsle, "msle"},
    {LossKind::kRmsle, "rmsle"},
    {LossKind::kLogCosh, "log_cosh"},
    {LossKind::kHinge, "hinge"},
    {LossKind::kSmoothedHinge, "smoothed_hinge"},
    {LossKind::kSquaredHinge, "squared_hinge"},
    {LossKind::kModifiedHuber, "modified_huber"},
    {LossKind::kRamp, "ramp"},
    {LossKind::kCrossEntropy, "cross_entropy"},
    {LossKind::kBinaryCrossEntropy, "binary_cross_entropy"},
    {LossKind::kNll, "nll"},
};

double LogCosh(double z) {
  const double a = std::abs(z);
  return a + std::log1p(std::exp(-2.0 * a)) - std::numbers::ln2;
}

double MarginTerm(LossKind kind, double yf) {
  switch (kind) {
    case LossKind::kHinge: return std::max(0.0, 1.0 - yf);
    case LossKind::kSquaredHinge: {
      const double h = std::max(0.0, 1.0 - yf);
      return h * h;
    }
    case LossKind::kSmoothedHinge:
      if (yf >= 1.0) return 0.0;
      if (yf >= 0.0) return 0.5 * (1.0 - yf) * (1.0 - yf);
      return 0.5 - yf;
    case LossKind::kModifiedHuber:
      if (yf >= -1.0) {
        const double h = std::max(0.0, 1.0 - yf);
        return h * h;
      }
      return -4.0 * yf;
    case LossKind::kRamp: return std::clamp(1.0 - yf, 0.0, 2.0);
    default: break;
  }
  Fail(ErrorCode::kInvalidArgument, "not a margin loss");
}

void CheckProbability(double p) {
  Require(p >= 0.0 && p <= 1.0, ErrorCode::kDomain,
          "probability input outside [0, 1]: " + std::to_string(p));
}

void CheckTargets(const Matrix& targets) {
  for (Eigen::Index r = 0; r < targets.rows(); ++r) {
    const bool binary = ((targets.row(r).array() == 0.0) || (targets.row(r).array() == 1.0)).all();
    Require(binary, ErrorCode::kDomain, "classification targets must be 0/1 labels");
    if (targets.cols() > 1) {
      Require(targets.row(r).sum() == 1.0, ErrorCode::kDomain,
              "classification targets must be one-hot");
    }
  }
}

double RegressionLoss(LossKind kind, const Matrix& p, const Matrix& t) {
  double sum = 0.0;
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    const double a = p.data()[i];
    const double b = t.data()[i];
    switch (kind) {
      case LossKind::kMae: sum += std::abs(a - b); break;
      case LossKind::kMse:
      case LossKind::kRmse: sum += (a - b) * (a - b); break;
      case LossKind::kMsle:
      case LossKind::kRmsle: {
        Require(a > -1.0 && b > -1.0, ErrorCode::kDomain,
                "MSLE requires predictions and targets > -1");
        const double d = std::log1p(a) - std::log1p(b);
        sum += d * d;
        break;
      }
      case LossKind::kLogCosh: sum += LogCosh(a - b); break;
      default: break;
    }
  }
  const double mean = sum / static_cast<double>(p.size());
  return (kind == LossKind::kRmse || kind == LossKind::kRmsle) ? std::sqrt(mean) : mean;
}

}  // namespace

std::string_view LossName(LossKind kind) {
  for (const auto& l : kLosses) {
    if (l.kind == kind) return l.name;
  }
  return "unknown";
}

LossKind ParseLoss(std::string_view name) {
  for (const auto& l : kLosses) {
    if (l.name == name) return l.kind;
  }
  Fail(ErrorCode::kInvalidArgument, "unknown loss '" + std::string(name) + "'");
}

const std::vector<LossKind>& AllLosses() {
  static const std::vector<LossKind> all = [] {
    std::vector<LossKind> v;
    for (const auto& l : kLosses) v.push_back(l.kind);
    return v;
  }();
  return all;
}

bool IsRegressionLoss(LossKind kind) {
  switch (kind) {
    case LossKind::kMae:
    case LossKind::kMse:
    case LossKind::kRmse:
    case LossKind::kMsle:
    case LossKind::kRmsle:
    case LossKind::kLogCosh: return true;
    default: return false;
  }
}

bool IsMarginLoss(LossKind kind) {
  switch (kind) {
    case LossKind::kHinge:
    case LossKind::kSmoothedHinge:
    case LossKind::kSquaredHinge:
    case LossKind::kModifiedHuber:
    case LossKind::kRamp: return true;
    default: return false;
  }
}

double ComputeLoss(LossKind kind, const Matrix& predictions, const Matrix& targets) {
  Require(predictions.rows() == targets.rows() && predictions.cols() == targets.cols(),
          ErrorCode::kInvalidArgument, "predictions and targets differ in shape");
  Require(predictions.size() >= 1, ErrorCode::kInvalidArgument, "loss needs at least one sample");
  if (IsRegressionLoss(kind)) return RegressionLoss(kind, predictions, targets);

  CheckTargets(targets);
  const Eigen::Index n = predictions.rows();
  const Eigen::Index k = predictions.cols();
  const Eigen::Index positive = k - 1;
  double sum = 0.0;

  if (IsMarginLoss(kind)) {
    Require(k <= 2, ErrorCode::kPrecondition, "margin losses apply to binary tasks only");
    for (Eigen::Index r = 0; r < n; ++r) {
      const double p = predictions(r, positive);
      CheckProbability(p);
      const double f = 2.0 * p - 1.0;
      const double y = targets(r, positive) == 1.0 ? 1.0 : -1.0;
      sum += MarginTerm(kind, y * f);
    }
    return sum / static_cast<double>(n);
  }

  switch (kind) {
    case LossKind::kCrossEntropy:
      for (Eigen::Index r = 0; r < n; ++r) {
        for (Eigen::Index c = 0; c < k; ++c) CheckProbability(predictions(r, c));
        if (k == 1) {
          const double p = std::clamp(predictions(r, 0), kProbEps, 1.0 - kProbEps);
          sum -= targets(r, 0) == 1.0 ? std::log(p) : std::log(1.0 - p);
        } else {
          Eigen::Index cls = 0;
          targets.row(r).maxCoeff(&cls);
          sum -= std::log(std::clamp(predictions(r, cls), kProbEps, 1.0 - kProbEps));
        }
      }
      return sum / static_cast<double>(n);
    case LossKind::kBinaryCrossEntropy: {
      // Binary tasks score the positive column; wider one-hot targets are
      // scored entry-wise.
      const Eigen::Index first = k <= 2 ? positive : 0;
      double count = 0.0;
      for (Eigen::Index r = 0; r < n; ++r) {
        for (Eigen::Index c = first; c < k; ++c) {
          CheckProbability(predictions(r, c));
          const double p = std::clamp(predictions(r, c), kProbEps, 1.0 - kProbEps);
          const double t = targets(r, c);
          sum -= t * std::log(p) + (1.0 - t) * std::log(1.0 - p);
          count += 1.0;
        }
      }
      return sum / count;
    }
    case LossKind::kNll:
      Require(k >= 2, ErrorCode::kInvalidArgument, "NLL needs one log-probability per class");
      for (Eigen::Index r = 0; r < n; ++r) {
        for (Eigen::Index c = 0; c < k; ++c) {
          Require(predictions(r, c) <= 1e-12, ErrorCode::kDomain,
                  "NLL expects log-probabilities (<= 0)");
        }
        Eigen::Index cls = 0;
        targets.row(r).maxCoeff(&cls);
        sum -= predictions(r, cls);
      }
      return sum / static_cast<double>(n);
    default: break;
  }
  Fail(ErrorCode::kInvalidArgument, "unsupported loss");
}

}  // namespace tabsense::metrics
