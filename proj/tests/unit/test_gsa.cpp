#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "oracles.hpp"
#include "tabsense/core/error.hpp"
#include "tabsense/data/encoding.hpp"
#include "tabsense/gsa/efast.hpp"
#include "tabsense/models/model.hpp"
#include "test_util.hpp"

using namespace tabsense;
using namespace tabsense::gsa;

namespace {

ErrorCode CodeOf(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode::kInternal;
}

using Bounds = std::vector<std::pair<double, double>>;

BatchFunction Rowwise(std::function<double(const double*)> f) {
  return [f](const Matrix& x) {
    Matrix y(x.rows(), 1);
    for (Eigen::Index r = 0; r < x.rows(); ++r) y(r, 0) = f(x.row(r).data());
    return y;
  };
}

OutputIndices Analyze(std::function<double(const double*)> f, const Bounds& bounds, EfastConfig config = {}) {
  std::vector<std::string> names;
  for (size_t i = 0; i < bounds.size(); ++i) names.push_back("x" + std::to_string(i + 1));
  return RunEfast(Rowwise(std::move(f)), bounds, names, {"y"}, config).outputs.at(0);
}

void ExpectValidRanges(const OutputIndices& out) {
  for (const auto& ix : out.indices) {
    EXPECT_GE(ix.s1, -0.05) << ix.input;
    EXPECT_LE(ix.s1, ix.st + 0.05) << ix.input;
    EXPECT_LE(ix.st, 1.05) << ix.input;
  }
}

}  // namespace

TEST(Design, FrequenciesForThreeInputs) {
  EfastConfig config;
  EXPECT_EQ(MaxFrequency(config), 8);
  const auto design = MakeEfastDesign(config, 3);
  ASSERT_EQ(design.frequencies.size(), 3u);
  for (size_t i = 0; i < 3; ++i) {
    for (size_t j = 0; j < 3; ++j) EXPECT_EQ(design.frequencies[i][j], i == j ? 8 : 1);
  }
}

TEST(Design, ComplementaryFrequenciesCycle) {
  EfastConfig config;
  config.samples = 1025;
  const int omega = MaxFrequency(config);
  EXPECT_EQ(omega, 128);
  const auto design = MakeEfastDesign(config, 20);
  for (size_t i = 0; i < 20; ++i) {
    for (size_t j = 0; j < 20; ++j) {
      if (i == j) continue;
      EXPECT_GE(design.frequencies[i][j], 1);
      EXPECT_LE(design.frequencies[i][j], std::max(1, omega / 8));
    }
  }
}

TEST(Design, PointsFollowSearchCurveAndBounds) {
  EfastConfig config;
  config.seed = 3;
  const auto design = MakeEfastDesign(config, 4);
  const Bounds bounds = {{-2, 3}, {0, 1}, {10, 10.5}, {-1, -0.5}};
  for (size_t i = 0; i < 4; ++i) {
    const Matrix& u = design.unit_points[i];
    ASSERT_EQ(u.rows(), 65);
    for (Eigen::Index k = 0; k < u.rows(); ++k) {
      for (Eigen::Index j = 0; j < u.cols(); ++j) {
        ASSERT_GE(u(k, j), 0.0);
        ASSERT_LE(u(k, j), 1.0);
      }
    }
    // x(s) = 0.5 + asin(sin(w s + phi)) / pi: consecutive points step by the
    // triangle-wave slope 2w/N, up to reflections at 0 and 1.
    for (Eigen::Index j = 0; j < u.cols(); ++j) {
      const double w = design.frequencies[i][static_cast<size_t>(j)];
      for (Eigen::Index k = 1; k < u.rows(); ++k) {
        const double step = std::abs(u(k, j) - u(k - 1, j));
        EXPECT_LE(step, 2.0 * w / 65.0 + 1e-12);
      }
    }
    const Matrix x = ScaleToBounds(u, bounds);
    for (Eigen::Index k = 0; k < x.rows(); ++k) {
      for (size_t j = 0; j < 4; ++j) {
        ASSERT_GE(x(k, static_cast<Eigen::Index>(j)), bounds[j].first);
        ASSERT_LE(x(k, static_cast<Eigen::Index>(j)), bounds[j].second);
      }
    }
  }
  const auto again = MakeEfastDesign(config, 4);
  for (size_t i = 0; i < 4; ++i) EXPECT_EQ(again.unit_points[i], design.unit_points[i]);
  config.seed = 4;
  EXPECT_NE(MakeEfastDesign(config, 4).unit_points[0], design.unit_points[0]);
}

TEST(Design, InvalidConfigs) {
  EXPECT_EQ(CodeOf([] { MakeEfastDesign({}, 0); }), ErrorCode::kInvalidArgument);
  EXPECT_EQ(CodeOf([] { ValidateConfig({64, 4, 0}); }), ErrorCode::kInvalidArgument);
  EXPECT_EQ(CodeOf([] { ValidateConfig({63, 4, 0}); }), ErrorCode::kInvalidArgument);
  EXPECT_NO_THROW(ValidateConfig({37, 3, 0}));
  EXPECT_EQ(CodeOf([] { ValidateConfig({65, 0, 0}); }), ErrorCode::kInvalidArgument);
}

TEST(Curve, SpectrumOfPureHarmonic) {
  // y = cos(8 s): all variance sits at harmonic 8.
  std::vector<double> y(65);
  for (int k = 0; k < 65; ++k) y[k] = std::cos(8 * 2 * std::numbers::pi * k / 65.0);
  const auto c = AnalyzeCurve(y, 8, 4);
  EXPECT_NEAR(c.s1, 1.0, 1e-12);
  EXPECT_NEAR(c.st, 1.0, 1e-12);
  EXPECT_NEAR(c.variance, 0.5, 1e-12);
  std::vector<double> low(65);
  for (int k = 0; k < 65; ++k) low[k] = std::sin(2 * 2 * std::numbers::pi * k / 65.0);
  const auto d = AnalyzeCurve(low, 8, 4);
  EXPECT_NEAR(d.s1, 0.0, 1e-12);
  EXPECT_NEAR(d.st, 0.0, 1e-12);
}

TEST(Curve, ConstantOutputHasZeroVariance) {
  const auto c = AnalyzeCurve(std::vector<double>(65, 3.0), 8, 4);
  EXPECT_EQ(c.s1, 0.0);
  EXPECT_EQ(c.st, 0.0);
  EXPECT_EQ(c.variance, 0.0);
}

TEST(Efast, SingleVariableModel) {
  const auto out = Analyze([](const double* x) { return x[0]; }, {{0, 1}, {0, 1}});
  EXPECT_NEAR(out.indices[0].s1, 1.0, 0.05);
  EXPECT_NEAR(out.indices[0].st, 1.0, 0.05);
  EXPECT_NEAR(out.indices[1].s1, 0.0, 0.05);
  EXPECT_NEAR(out.indices[1].st, 0.0, 0.05);
}

// With three or more inputs and N = 65 every complementary frequency is 1, so
// single draws are noisy; the additive invariants are checked at N = 1025.
TEST(Efast, AdditiveModelHasNoInteractions) {
  EfastConfig fine;
  fine.samples = 1025;
  const auto out = Analyze([](const double* x) { return x[0] + x[1]; }, {{0, 1}, {0, 1}});
  double sum = 0.0;
  for (const auto& ix : out.indices) {
    EXPECT_LT(std::abs(ix.st - ix.s1), 0.05);
    sum += ix.s1;
  }
  EXPECT_GE(sum, 0.9);
  EXPECT_LE(sum, 1.05);
  const auto three = Analyze([](const double* x) { return 2 * x[0] - x[1] + 0.5 * x[2] * x[2]; },
                         {{-1, 1}, {0, 2}, {0, 3}}, fine);
  double s = 0.0;
  for (const auto& ix : three.indices) {
    EXPECT_LT(ix.st - ix.s1, 0.05);
    s += ix.s1;
  }
  EXPECT_GE(s, 0.9);
  EXPECT_LE(s, 1.05);
  ExpectValidRanges(three);
}

TEST(Efast, ProductShowsInteraction) {
  const auto out = Analyze([](const double* x) { return x[0] * x[1]; }, {{-1, 1}, {-1, 1}});
  for (const auto& ix : out.indices) {
    EXPECT_LT(ix.s1, 0.1);
    EXPECT_GT(ix.st, 0.4);
  }
}

TEST(Efast, MatchesSaltelliOracleOnIshigami) {
  const double a = 7.0, b = 0.1;
  const double pi = std::numbers::pi;
  const Bounds bounds = {{-pi, pi}, {-pi, pi}, {-pi, pi}};
  const auto analytic = oracle::IshigamiAnalytic(a, b);
  const auto saltelli = oracle::SaltelliJansen([&](const oracle::Point& x) { return oracle::Ishigami(x, a, b); },
                                               bounds, 1 << 15, 5);
  for (int i = 0; i < 3; ++i) {
    EXPECT_NEAR(saltelli.s1[i], analytic.s1[i], 0.03);
    EXPECT_NEAR(saltelli.st[i], analytic.st[i], 0.03);
  }
  EfastConfig config;
  config.samples = 1025;
  const auto out = Analyze([&](const double* x) { return oracle::Ishigami({x[0], x[1], x[2]}, a, b); }, bounds, config);
  for (int i = 0; i < 3; ++i) {
    EXPECT_NEAR(out.indices[i].s1, analytic.s1[i], 0.05) << i;
    EXPECT_NEAR(out.indices[i].st, analytic.st[i], 0.05) << i;
  }
}

TEST(Efast, DegenerateBoundsAndConstantOutput) {
  const auto r = RunEfast(Rowwise([](const double* x) { return x[0] + x[1]; }), {{0, 1}, {2, 2}}, {"a", "b"},
                          {"y"}, {});
  EXPECT_EQ(r.outputs[0].indices[1].s1, 0.0);
  EXPECT_EQ(r.outputs[0].indices[1].st, 0.0);
  EXPECT_FALSE(r.warnings.empty());
  const auto c = RunEfast(Rowwise([](const double*) { return 1.0; }), {{0, 1}, {0, 1}}, {"a", "b"}, {"y"}, {});
  for (const auto& ix : c.outputs[0].indices) {
    EXPECT_EQ(ix.s1, 0.0);
    EXPECT_EQ(ix.st, 0.0);
  }
  EXPECT_FALSE(c.warnings.empty());
}

TEST(Efast, DeterministicGivenSeed) {
  EfastConfig config;
  config.seed = 9;
  const auto f = [](const double* x) { return std::sin(3 * x[0]) * x[1] + x[2]; };
  const auto a = Analyze(f, {{0, 1}, {0, 1}, {0, 1}}, config);
  const auto b = Analyze(f, {{0, 1}, {0, 1}, {0, 1}}, config);
  for (size_t i = 0; i < 3; ++i) {
    EXPECT_EQ(a.indices[i].s1, b.indices[i].s1);
    EXPECT_EQ(a.indices[i].st, b.indices[i].st);
  }
}

class TitanicGsa : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    table_ = new data::DataTable(
        data::SplitRandom(data::LoadCsv(testutil::DataFile("titanic_surrogate.csv")), {}, 0));
  }
  static void TearDownTestSuite() { delete table_; }
  static data::DataTable* table_;
};
data::DataTable* TitanicGsa::table_ = nullptr;

TEST_F(TitanicGsa, RankingAndRefinement) {
  const std::vector<std::string> inputs = {"Pclass", "Sex", "Age", "SibSp", "Parch", "Fare"};
  const auto model = testutil::Train(*table_, inputs, {"Survived"}, data::Task::kClassification,
                                     models::Family::kGradientBoostedTrees);
  EfastConfig fine;
  fine.samples = 1025;
  const auto result = RunGsa(model, *table_, data::Split::kValidation, fine);
  ASSERT_EQ(result.outputs.size(), 1u);
  EXPECT_EQ(result.outputs[0].output, "Survived=1");
  std::map<std::string, SobolIndex> by;
  for (const auto& ix : result.outputs[0].indices) by[ix.input] = ix;
  ASSERT_EQ(by.size(), 7u);
  for (const char* strong : {"Pclass", "Age", "SibSp"}) {
    for (const char* weak : {"Fare", "Parch"}) {
      EXPECT_GT(by[strong].st, by[weak].st) << strong << " vs " << weak;
      EXPECT_GT(by[strong].s1, by[weak].s1) << strong << " vs " << weak;
    }
  }
  bool sex_warning = false;
  for (const auto& w : result.warnings) sex_warning |= w.find("Sex=female") != std::string::npos;
  EXPECT_TRUE(sex_warning);

  const auto refined = testutil::Train(*table_, {"Pclass", "Sex", "Age", "SibSp"}, {"Survived"},
                                       data::Task::kClassification, models::Family::kGradientBoostedTrees);
  const auto after = RunGsa(refined, *table_, data::Split::kValidation, fine);
  ASSERT_EQ(after.outputs[0].indices.size(), 5u);
  double before_sum = 0.0, after_sum = 0.0;
  for (const auto& ix : after.outputs[0].indices) {
    EXPECT_NE(ix.input, "Fare");
    EXPECT_NE(ix.input, "Parch");
    after_sum += ix.s1;
    before_sum += by[ix.input].s1;
  }
  // The remaining inputs carry what the full model attributed to them.
  EXPECT_NEAR(after_sum, before_sum, 0.1);
  EXPECT_GT(after_sum, 0.5);
}

TEST(Gsa, IgnoredInputGetsNothing) {
  // A forest restricted to x1 and x2 never splits on x3.
  auto table = data::ParseCsv(testutil::LinearCsv(500, 11));
  table = data::SplitRandom(table, {}, 1);
  auto model = testutil::Train(table, {"x1", "x2", "x3"}, {"y"}, data::Task::kRegression,
                               models::Family::kRandomForest, {{"n_trees", 20}, {"max_features", 3}});
  // Prune every split on x3 by collapsing it onto its left child.
  auto& forest = std::get<models::ForestState>(model.parameters);
  for (auto& tree : forest.trees) {
    for (auto& node : tree.nodes) {
      if (node.feature == 2) node.right = node.left;
    }
  }
  // Step-shaped outputs leak harmonics above omega / 2 = 4 at N = 65, which
  // would be booked against the ignored input's total index.
  EfastConfig fine;
  fine.samples = 1025;
  const auto r = RunGsa(model, table, data::Split::kTest, fine);
  EXPECT_LT(r.outputs[0].indices[2].s1, 0.05);
  EXPECT_LT(r.outputs[0].indices[2].st, 0.05);
}

TEST(Gsa, CsvLayout) {
  SobolResult r;
  r.outputs.push_back({"y", {{"a,b", 0.5, 0.75}}, 1.0});
  EXPECT_EQ(SobolCsv(r), "input,output,s1,st\n\"a,b\",y,0.5,0.75\n");
}
