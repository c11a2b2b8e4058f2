#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "delayprop/cases.hpp"
#include "delayprop/errors.hpp"
#include "delayprop/regression.hpp"

using namespace delayprop;

namespace {

CaseTable table_of(const std::vector<std::string>& cols, const std::vector<std::vector<double>>& values) {
  CaseTable t;
  t.columns = cols;
  for (std::size_t r = 0; r < values.size(); ++r) {
    t.timestamps.push_back(static_cast<EpochSeconds>(r));
    std::vector<std::string> row;
    for (double v : values[r]) row.push_back(format_number(v));
    t.rows.push_back(std::move(row));
  }
  return t;
}

double slope_of(const PiecewiseRegression& m, const std::string& name) {
  for (const auto& t : m.terms) {
    if (t.predictor == name) return t.slopes.at(0);
  }
  return 0.0;
}

}  // namespace

TEST(FitPiecewise, ConstantResponseGivesInterceptOnly) {
  std::vector<std::vector<double>> v;
  for (int i = 0; i < 50; ++i) v.push_back({3.0, static_cast<double>(i)});
  const auto m = fit_piecewise(table_of({"y", "x"}, v), "y", {"x"});
  EXPECT_TRUE(m.terms.empty());
  EXPECT_NEAR(m.intercept, 3.0, 1e-12);
  EXPECT_DOUBLE_EQ(m.sigma, 0.5);
  EXPECT_NEAR(predict_mean(m, {}), 3.0, 1e-12);
}

TEST(FitPiecewise, RecoversLinearSlopeAndRejectsJunk) {
  std::mt19937_64 rng(42);
  std::normal_distribution<double> noise(0, 1);
  std::uniform_real_distribution<double> ux(0, 50);
  std::vector<std::vector<double>> v;
  for (int i = 0; i < 1000; ++i) {
    const double x = ux(rng);
    v.push_back({2 * x + noise(rng), x, ux(rng)});
  }
  const auto m = fit_piecewise(table_of({"y", "x", "junk"}, v), "y", {"x", "junk"});
  ASSERT_EQ(m.predictors(), std::vector<std::string>{"x"});
  EXPECT_EQ(m.terms[0].kind, RegressionTerm::Kind::linear);
  EXPECT_NEAR(slope_of(m, "x"), 2.0, 0.1);
  EXPECT_NEAR(m.sigma, 1.0, 0.15);
}

TEST(FitPiecewise, RecoversHingeBreakpoint) {
  std::mt19937_64 rng(7);
  std::normal_distribution<double> noise(0, 1);
  std::uniform_real_distribution<double> ux(0, 100);
  std::vector<std::vector<double>> v;
  for (int i = 0; i < 600; ++i) {
    const double x = ux(rng);
    const double y = 5 + 0.1 * x + 0.9 * std::max(x - 40.0, 0.0);
    v.push_back({y + noise(rng), x});
  }
  const auto m = fit_piecewise(table_of({"y", "x"}, v), "y", {"x"});
  ASSERT_EQ(m.terms.size(), 1u);
  ASSERT_EQ(m.terms[0].kind, RegressionTerm::Kind::hinge);
  // One decile step of U(0,100) is about 10.
  EXPECT_NEAR(*m.terms[0].breakpoint, 40.0, 10.0);
  EXPECT_NEAR(m.terms[0].slopes[0], 0.1, 0.1);
  EXPECT_NEAR(m.terms[0].slopes[1], 1.0, 0.1);
}

TEST(FitPiecewise, CategoricalPredictorAsIndicators) {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> noise(0, 1);
  CaseTable t;
  t.columns = {"y", "weather"};
  const std::vector<std::string> levels{"IMC", "MVMC", "VMC"};
  const std::map<std::string, double> effect{{"IMC", 12}, {"MVMC", 4}, {"VMC", 0}};
  for (int i = 0; i < 300; ++i) {
    const auto& w = levels[rng() % 3];
    t.timestamps.push_back(i);
    t.rows.push_back({format_number(effect.at(w) + noise(rng)), w});
  }
  const auto m = fit_piecewise(t, "y", {"weather"});
  ASSERT_EQ(m.terms.size(), 1u);
  EXPECT_EQ(m.terms[0].kind, RegressionTerm::Kind::categorical);
  EXPECT_NEAR(predict_mean(m, {{"weather", std::string("IMC")}}), 12, 0.4);
  EXPECT_NEAR(predict_mean(m, {{"weather", std::string("VMC")}}), 0, 0.4);
}

TEST(FitPiecewise, TooFewCasesThrows) {
  std::vector<std::vector<double>> v;
  for (int i = 0; i < 15; ++i) v.push_back({1.0 * i, 1.0 * i, 2.0 * i});
  EXPECT_THROW(fit_piecewise(table_of({"y", "a", "b"}, v), "y", {"a", "b"}), DataError);
  EXPECT_THROW(fit_piecewise(table_of({"y", "a", "b"}, v), "y", {"a"}, FitOptions{1}), std::invalid_argument);
}

TEST(PredictMean, Examples) {
  PiecewiseRegression intercept_only{"y", 4.5, {}, 1.0, 0.0};
  EXPECT_DOUBLE_EQ(predict_mean(intercept_only, {{"x", 100.0}}), 4.5);

  PiecewiseRegression linear{"y", 1.0, {{"x", RegressionTerm::Kind::linear, std::nullopt, {2.0}, {}}}, 1.0, 0.0};
  EXPECT_DOUBLE_EQ(predict_mean(linear, {{"x", 3.0}}), 7.0);

  PiecewiseRegression hinge{"y", 2.0, {{"x", RegressionTerm::Kind::hinge, 40.0, {0.0, 1.0}, {}}}, 1.0, 0.0};
  EXPECT_DOUBLE_EQ(predict_mean(hinge, {{"x", 50.0}}), 2.0 + 10.0);
  EXPECT_THROW(predict_mean(hinge, {}), std::invalid_argument);
  EXPECT_THROW(predict_mean(hinge, {{"x", std::string("a")}}), std::invalid_argument);
}

TEST(PredictMeanProperty, ContinuousAtBreakpoint) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-5, 5);
  for (int i = 0; i < 200; ++i) {
    const double c = 10 * u(rng);
    PiecewiseRegression m{"y", u(rng), {{"x", RegressionTerm::Kind::hinge, c, {u(rng), u(rng)}, {}}}, 1.0, 0.0};
    const double eps = 1e-7;
    EXPECT_NEAR(predict_mean(m, {{"x", c - eps}}), predict_mean(m, {{"x", c + eps}}), 1e-5);
  }
}

TEST(FitPiecewiseProperty, SelectionNeverWorseThanInterceptOnly) {
  std::mt19937_64 rng(17);
  std::normal_distribution<double> noise(0, 3);
  std::uniform_real_distribution<double> ux(-20, 20);
  for (int trial = 0; trial < 10; ++trial) {
    std::vector<std::vector<double>> v;
    const double a = ux(rng) / 10;
    for (int i = 0; i < 200; ++i) {
      const double x1 = ux(rng);
      const double x2 = ux(rng);
      v.push_back({a * x1 + noise(rng), x1, x2});
    }
    const auto t = table_of({"y", "x1", "x2"}, v);
    const auto full = fit_piecewise(t, "y", {"x1", "x2"});
    const auto none = fit_piecewise(t, "y", {});
    EXPECT_LE(full.cv_score, none.cv_score);
  }
}

TEST(FitPiecewiseProperty, PermutedCaseOrderSelectsSamePredictors) {
  std::mt19937_64 rng(23);
  std::normal_distribution<double> noise(0, 2);
  std::uniform_real_distribution<double> ux(0, 60);
  std::vector<std::vector<double>> v;
  for (int i = 0; i < 300; ++i) {
    const double a = ux(rng);
    const double b = ux(rng);
    const double c = ux(rng);
    v.push_back({0.5 * a + 0.2 * std::max(b - 30, 0.0) + noise(rng), a, b, c});
  }
  const auto base = fit_piecewise(table_of({"y", "a", "b", "c"}, v), "y", {"a", "b", "c"});
  for (int p = 0; p < 5; ++p) {
    std::shuffle(v.begin(), v.end(), rng);
    const auto m = fit_piecewise(table_of({"y", "a", "b", "c"}, v), "y", {"a", "b", "c"});
    EXPECT_EQ(m.predictors(), base.predictors());
    for (std::size_t i = 0; i < m.terms.size(); ++i) {
      EXPECT_EQ(m.terms[i].kind, base.terms[i].kind);
      EXPECT_EQ(m.terms[i].breakpoint, base.terms[i].breakpoint);
    }
  }
}

TEST(FitPiecewiseProperty, MeanAtPredictorCentreWithinTwoStandardErrors) {
  const double sigma = 6.0;
  std::uniform_real_distribution<double> ux(-30, 90);
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> noise(0, sigma);
    std::vector<std::vector<double>> v;
    double xbar = 0;
    const int n = 2000;
    for (int i = 0; i < n; ++i) {
      const double x = ux(rng);
      xbar += x / n;
      v.push_back({3 + 0.12 * x + noise(rng), x});
    }
    const auto m = fit_piecewise(table_of({"y", "x"}, v), "y", {"x"});
    EXPECT_LT(std::abs(predict_mean(m, {{"x", xbar}}) - (3 + 0.12 * xbar)), 2 * sigma / std::sqrt(n));
  }
}
