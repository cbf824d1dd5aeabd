#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "tabsense/core/error.hpp"
#include "tabsense/metrics/loss.hpp"

using namespace tabsense;
using namespace tabsense::metrics;

namespace {

ErrorCode CodeOf(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode::kInternal;
}

Matrix Row(std::initializer_list<double> values) {
  Matrix m(static_cast<Eigen::Index>(values.size()), 1);
  Eigen::Index i = 0;
  for (double v : values) m(i++, 0) = v;
  return m;
}

std::vector<double> Flat(const Matrix& m) { return {m.data(), m.data() + m.size()}; }

struct Instance {
  Matrix p;
  Matrix t;
};

// Random predictions / targets suitable for `kind`.
Instance RandomInstance(LossKind kind, std::mt19937_64& gen) {
  std::uniform_int_distribution<int> rows(1, 40);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const Eigen::Index n = rows(gen);
  Instance x;
  if (IsRegressionLoss(kind)) {
    const Eigen::Index m = 1 + static_cast<Eigen::Index>(gen() % 3);
    x.p.resize(n, m);
    x.t.resize(n, m);
    const bool log_domain = kind == LossKind::kMsle || kind == LossKind::kRmsle;
    for (Eigen::Index i = 0; i < x.p.size(); ++i) {
      x.p.data()[i] = log_domain ? -0.99 + 10.0 * u(gen) : 20.0 * u(gen) - 10.0;
      x.t.data()[i] = log_domain ? -0.99 + 10.0 * u(gen) : 20.0 * u(gen) - 10.0;
    }
    return x;
  }
  const Eigen::Index k = IsMarginLoss(kind) ? 2 : 2 + static_cast<Eigen::Index>(gen() % 3);
  x.p.resize(n, k);
  x.t = Matrix::Zero(n, k);
  for (Eigen::Index r = 0; r < n; ++r) {
    double sum = 0.0;
    for (Eigen::Index c = 0; c < k; ++c) sum += (x.p(r, c) = u(gen) + 1e-3);
    x.p.row(r) /= sum;
    x.t(r, static_cast<Eigen::Index>(gen() % k)) = 1.0;
    if (kind == LossKind::kNll) x.p.row(r) = x.p.row(r).array().log();
  }
  return x;
}

}  // namespace

TEST(Loss, NamesRoundTrip) {
  EXPECT_EQ(AllLosses().size(), 14u);
  for (LossKind k : AllLosses()) EXPECT_EQ(ParseLoss(LossName(k)), k);
  EXPECT_EQ(LossName(LossKind::kLogCosh), "log_cosh");
  EXPECT_EQ(CodeOf([] { ParseLoss("huber"); }), ErrorCode::kInvalidArgument);
}

TEST(Loss, HandComputedExamples) {
  const Matrix p = Row({1, 0}), t = Row({0, 1});
  EXPECT_DOUBLE_EQ(ComputeLoss(LossKind::kMae, p, t), 1.0);
  EXPECT_DOUBLE_EQ(ComputeLoss(LossKind::kMse, p, t), 1.0);
  EXPECT_DOUBLE_EQ(ComputeLoss(LossKind::kRmse, p, t), 1.0);
  EXPECT_NEAR(ComputeLoss(LossKind::kBinaryCrossEntropy, Row({0.5}), Row({1})), std::log(2.0), 1e-15);
  EXPECT_NEAR(ComputeLoss(LossKind::kBinaryCrossEntropy, Row({0.5}), Row({0})), 0.693147, 1e-6);
  EXPECT_DOUBLE_EQ(ComputeLoss(LossKind::kHinge, Row({1.0}), Row({1})), 0.0);
  EXPECT_DOUBLE_EQ(ComputeLoss(LossKind::kHinge, Row({0.0}), Row({1})), 2.0);
}

TEST(Loss, PerfectRegressionFitIsZero) {
  const Matrix a = Row({0.5, 3.0, -0.25, 7.0});
  for (LossKind k : AllLosses()) {
    if (IsRegressionLoss(k)) EXPECT_EQ(ComputeLoss(k, a, a), 0.0) << LossName(k);
  }
}

TEST(Loss, MatchesNaiveOracle) {
  std::mt19937_64 gen(2024);
  for (int trial = 0; trial < 1000; ++trial) {
    const LossKind kind = AllLosses()[static_cast<size_t>(trial) % AllLosses().size()];
    const Instance x = RandomInstance(kind, gen);
    const double got = ComputeLoss(kind, x.p, x.t);
    const std::string name(LossName(kind));
    const double want = IsRegressionLoss(kind)
                            ? oracle::NaiveRegression(name.c_str(), Flat(x.p), Flat(x.t))
                            : oracle::NaiveClassification(name.c_str(), Flat(x.p), Flat(x.t),
                                                          static_cast<size_t>(x.p.cols()));
    ASSERT_NEAR(got, want, 1e-12 * std::max(1.0, std::abs(want))) << name << " trial " << trial;
    ASSERT_GE(got, 0.0) << name;
  }
}

TEST(Loss, RootIdentities) {
  std::mt19937_64 gen(7);
  for (int i = 0; i < 200; ++i) {
    const Instance x = RandomInstance(LossKind::kMsle, gen);
    const double mse = ComputeLoss(LossKind::kMse, x.p, x.t);
    const double rmse = ComputeLoss(LossKind::kRmse, x.p, x.t);
    EXPECT_NEAR(rmse * rmse, mse, 1e-12 * std::max(1.0, mse));
    const double msle = ComputeLoss(LossKind::kMsle, x.p, x.t);
    const double rmsle = ComputeLoss(LossKind::kRmsle, x.p, x.t);
    EXPECT_NEAR(rmsle * rmsle, msle, 1e-12 * std::max(1.0, msle));
  }
}

TEST(Loss, ZeroIffEqual) {
  std::mt19937_64 gen(8);
  std::uniform_real_distribution<double> u(0.0, 5.0);
  for (LossKind k : AllLosses()) {
    if (!IsRegressionLoss(k)) continue;
    for (int i = 0; i < 100; ++i) {
      Matrix a(5, 2);
      for (Eigen::Index j = 0; j < a.size(); ++j) a.data()[j] = u(gen);
      Matrix b = a;
      EXPECT_EQ(ComputeLoss(k, a, b), 0.0);
      b(static_cast<Eigen::Index>(gen() % 5), static_cast<Eigen::Index>(gen() % 2)) += 1e-3 + u(gen);
      EXPECT_GT(ComputeLoss(k, a, b), 0.0) << LossName(k);
    }
  }
}

TEST(Loss, SymmetryAndMonotoneRanking) {
  std::mt19937_64 gen(9);
  std::vector<double> mse, rmse;
  for (int i = 0; i < 50; ++i) {
    const Instance x = RandomInstance(LossKind::kMse, gen);
    EXPECT_DOUBLE_EQ(ComputeLoss(LossKind::kMae, x.p, x.t), ComputeLoss(LossKind::kMae, x.t, x.p));
    EXPECT_DOUBLE_EQ(ComputeLoss(LossKind::kMse, x.p, x.t), ComputeLoss(LossKind::kMse, x.t, x.p));
  }
  const Matrix t = Row({1, 2, 3, 4});
  for (int m = 0; m < 20; ++m) {
    const Matrix p = t.array() + 0.1 * (m % 7) - 0.05 * m;
    mse.push_back(ComputeLoss(LossKind::kMse, p, t));
    rmse.push_back(ComputeLoss(LossKind::kRmse, p, t));
  }
  EXPECT_EQ(std::min_element(mse.begin(), mse.end()) - mse.begin(),
            std::min_element(rmse.begin(), rmse.end()) - rmse.begin());
}

TEST(Loss, LogCoshIsStableForLargeResiduals) {
  const double v = ComputeLoss(LossKind::kLogCosh, Row({1000.0}), Row({0.0}));
  EXPECT_NEAR(v, 1000.0 - std::log(2.0), 1e-9);
}

TEST(Loss, DomainAndShapeErrors) {
  EXPECT_EQ(CodeOf([] { ComputeLoss(LossKind::kMse, Row({1, 2}), Row({1})); }), ErrorCode::kInvalidArgument);
  EXPECT_EQ(CodeOf([] { ComputeLoss(LossKind::kMse, Matrix(0, 1), Matrix(0, 1)); }),
            ErrorCode::kInvalidArgument);
  EXPECT_EQ(CodeOf([] { ComputeLoss(LossKind::kMsle, Row({-1.0}), Row({0.0})); }), ErrorCode::kDomain);
  EXPECT_EQ(CodeOf([] { ComputeLoss(LossKind::kCrossEntropy, Row({1.2}), Row({1})); }), ErrorCode::kDomain);
  EXPECT_EQ(CodeOf([] { ComputeLoss(LossKind::kBinaryCrossEntropy, Row({-0.1}), Row({1})); }),
            ErrorCode::kDomain);
  EXPECT_EQ(CodeOf([] { ComputeLoss(LossKind::kNll, Matrix::Constant(1, 2, 0.5), Matrix::Identity(1, 2)); }),
            ErrorCode::kDomain);
  Matrix p3 = Matrix::Constant(2, 3, 1.0 / 3.0);
  Matrix t3 = Matrix::Zero(2, 3);
  t3(0, 0) = t3(1, 2) = 1.0;
  EXPECT_EQ(CodeOf([&] { ComputeLoss(LossKind::kHinge, p3, t3); }), ErrorCode::kPrecondition);
  EXPECT_NO_THROW(ComputeLoss(LossKind::kCrossEntropy, p3, t3));
}

TEST(Loss, ProbabilitiesAreClamped) {
  const double ce = ComputeLoss(LossKind::kBinaryCrossEntropy, Row({0.0}), Row({1}));
  EXPECT_NEAR(ce, -std::log(1e-12), 1e-9);
  EXPECT_TRUE(std::isfinite(ComputeLoss(LossKind::kCrossEntropy, Row({1.0}), Row({0}))));
}
