#include <gtest/gtest.h>

#include <numeric>
#include <sstream>

#include "delayprop/errors.hpp"
#include "delayprop/evaluation.hpp"
#include "delayprop/synth.hpp"
#include "oracles.hpp"

using namespace delayprop;

namespace {

const BinScheme kScheme({0, 15, 30, 45}, false, false);

Network single_node(std::vector<double> p, bool with_isolated = false) {
  NetworkSpec spec;
  spec.nodes.push_back({Variable::binned("d", kScheme), {}, {}});
  std::vector<ConditionalTable> tables{ConditionalTable("d", {}, 3, std::move(p))};
  if (with_isolated) {
    spec.nodes.push_back({Variable::categorical("x", {"a", "b"}), {}, {}});
    tables.emplace_back("x", std::vector<std::size_t>{}, 2, std::vector<double>{0.4, 0.6});
  }
  return build_network(spec).with_tables(std::move(tables));
}

}  // namespace

TEST(ApproxMse, Examples) {
  const std::vector<std::size_t> a{1};
  const std::vector<std::size_t> p{0};
  EXPECT_DOUBLE_EQ(approx_mse(a, p, kScheme), 225.0);
  const std::vector<std::size_t> same{0, 1, 2, 2};
  EXPECT_DOUBLE_EQ(approx_mse(same, same, kScheme), 0.0);
  EXPECT_THROW(approx_mse(std::vector<std::size_t>{}, std::vector<std::size_t>{}, kScheme), std::invalid_argument);
  EXPECT_THROW(approx_mse(a, same, kScheme), std::invalid_argument);
}

TEST(ApproxMseProperty, ZeroIffAllMatch) {
  std::mt19937_64 rng(4);
  for (int t = 0; t < 200; ++t) {
    std::vector<std::size_t> a(1 + rng() % 20);
    for (auto& v : a) v = rng() % 3;
    auto p = a;
    const bool perturb = rng() % 2;
    if (perturb) {
      const auto i = rng() % p.size();
      p[i] = (a[i] + 1) % 3;
    }
    EXPECT_EQ(approx_mse(a, p, kScheme) == 0.0, a == p);
    EXPECT_GE(approx_mse(a, p, kScheme), 0.0);
  }
}

TEST(ScaledMse, Examples) {
  const auto s = scaled_mse({{1, 100}, {30, 150}, {300, 200}});
  EXPECT_DOUBLE_EQ(s.at(1), 0.0);
  EXPECT_DOUBLE_EQ(s.at(30), 0.5);
  EXPECT_DOUBLE_EQ(s.at(300), 1.0);
  EXPECT_THROW(scaled_mse({{1, 5}, {2, 5}}), std::invalid_argument);
  EXPECT_THROW(scaled_mse({{1, 5}}), std::invalid_argument);
}

TEST(ScaledMseProperty, AffineInvariant) {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(0, 500);
  for (int t = 0; t < 100; ++t) {
    std::map<double, double> m;
    for (double w : {1.0, 3.0, 10.0, 30.0, 100.0}) m[w] = u(rng);
    const double a = 0.01 + u(rng);
    const double b = u(rng) - 250;
    std::map<double, double> t2;
    for (const auto& [w, v] : m) t2[w] = a * v + b;
    const auto s1 = scaled_mse(m);
    const auto s2 = scaled_mse(t2);
    for (const auto& [w, v] : s1) {
      EXPECT_NEAR(v, s2.at(w), 1e-9);
      EXPECT_GE(v, 0.0);
      EXPECT_LE(v, 1.0);
    }
  }
}

TEST(SplitByDate, PartitionAndWarnings) {
  const std::vector<Assignment> cases{{0}, {1}, {2}, {0}};
  const std::vector<EpochSeconds> ts{10, 40, 20, 30};
  const auto s = split_by_date(cases, ts, 25);
  EXPECT_EQ(s.train, (std::vector<Assignment>{{0}, {2}}));
  EXPECT_EQ(s.test, (std::vector<Assignment>{{1}, {0}}));
  EXPECT_TRUE(s.warnings.empty());
  const auto early = split_by_date(cases, ts, 0);
  EXPECT_TRUE(early.train.empty());
  EXPECT_EQ(early.test.size(), 4u);
  EXPECT_FALSE(early.warnings.empty());
}

TEST(EvaluatePredictions, ConfusionSumsToCaseCount) {
  const auto gt = default_scenario();
  const auto cases = forward_sample(gt.network, 300, 5);
  for (const auto& e : evaluate_predictions(gt.network, cases)) {
    EXPECT_EQ(e.confusion.total() + e.skipped, cases.size());
    EXPECT_EQ(e.cases, e.confusion.total());
    EXPECT_GE(e.approx_mse, 0.0);
  }
}

TEST(BlanketSqError, SingleNodeIsVarianceOfMidpoints) {
  // Cases in exact proportion to the node's distribution.
  const auto net = single_node({0.25, 0.5, 0.25});
  const std::vector<Assignment> cases{{0}, {1}, {1}, {2}};
  const double mu = 22.5;
  const double var = 0.25 * 15 * 15 + 0.25 * 15 * 15;
  const auto r = blanket_sq_error(net, cases);
  EXPECT_NEAR(r.at("d").mse, var, 1e-12);
  EXPECT_NEAR(markov_blanket_mean(net, cases[0], 0), mu, 1e-12);

  const auto wide = single_node({0.25, 0.5, 0.25}, true);
  const std::vector<Assignment> wide_cases{{0, 1}, {1, 0}, {1, 1}, {2, 0}};
  EXPECT_NEAR(blanket_sq_error(wide, wide_cases).at("d").mse, var, 1e-12);
}

TEST(BlanketSqError, DeterministicNetworkIsZero) {
  NetworkSpec spec;
  spec.nodes.push_back({Variable::binned("a", kScheme), {}, {}});
  spec.nodes.push_back({Variable::binned("b", kScheme), {"a"}, {}});
  const auto net = build_network(spec).with_tables(
      {ConditionalTable("a", {}, 3, {1, 0, 0}), ConditionalTable("b", {3}, 3, {0, 1, 0, 0, 0, 1, 1, 0, 0})});
  const auto r = blanket_sq_error(net, forward_sample(net, 50, 1));
  EXPECT_DOUBLE_EQ(r.at("a").mse, 0.0);
  EXPECT_DOUBLE_EQ(r.at("b").mse, 0.0);
}

TEST(KsStatistic, Examples) {
  const std::vector<double> a{1, 2, 3, 4};
  EXPECT_DOUBLE_EQ(ks_statistic(a, a), 0.0);
  EXPECT_DOUBLE_EQ(ks_statistic({1, 2}, {3, 4}), 1.0);
  EXPECT_DOUBLE_EQ(ks_statistic({1, 2, 3, 4}, {3, 4, 5, 6}), 0.5);
  EXPECT_THROW(ks_statistic({}, a), std::invalid_argument);
}

TEST(LlComparison, SelfGeneratedHoldoutHasSmallKs) {
  const auto gt = default_scenario();
  const auto holdout = forward_sample(gt.network, 1000, 1234);
  const auto r = ll_comparison(gt.network, holdout, 1000, 99);
  EXPECT_LT(r.ks, 0.1);
  EXPECT_EQ(r.holdout.size() + r.holdout_neg_inf, 1000u);
  const auto same = ll_comparison(gt.network, forward_sample(gt.network, 500, 99), 500, 99);
  EXPECT_DOUBLE_EQ(same.ks, 0.0);
}

TEST(LlComparison, NegativeInfinitySegregated) {
  const auto net = single_node({0.5, 0.5, 0.0});
  const std::vector<Assignment> holdout{{0}, {2}, {1}};
  const auto r = ll_comparison(net, holdout, 10, 1);
  EXPECT_EQ(r.holdout_neg_inf, 1u);
  EXPECT_EQ(r.holdout.size(), 2u);
  EXPECT_EQ(r.generated_neg_inf, 0u);
}

TEST(WeightSweep, SizesAndCsvRows) {
  const auto gt = default_scenario();
  const auto train = forward_sample(gt.network, 300, 1);
  const auto test = forward_sample(gt.network, 100, 2);
  const std::vector<double> one{30};
  const auto s1 = weight_sweep(gt.network.spec(), train, test, one);
  EXPECT_EQ(s1.weights.size(), 1u);
  const std::vector<double> three{1, 30, 300};
  const auto s = weight_sweep(gt.network.spec(), train, test, three);
  EXPECT_EQ(s.nodes.size(), 7u);
  for (const auto& n : s.nodes) {
    EXPECT_EQ(s.train_mse.at(n).size(), 3u);
    EXPECT_TRUE(s.regression_only_test.count(n));
  }
  std::ostringstream csv;
  write_sweep_csv(csv, s);
  const auto text = csv.str();
  EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 1 + 3 * 7);
  EXPECT_THROW(weight_sweep(gt.network.spec(), train, test, std::vector<double>{}), std::invalid_argument);
  EXPECT_THROW(weight_sweep(gt.network.spec(), train, test, std::vector<double>{0}), std::invalid_argument);
}

TEST(WeightSweepProperty, CountsOnlyFitsTrainingAtLeastAsWell) {
  auto gt = default_scenario();
  auto spec = gt.network.spec();
  spec.prior_strength = 100;
  const auto train = forward_sample(gt.network, 2000, 7);
  const std::vector<double> w{30};
  const auto s = weight_sweep(spec, train, {}, w, 30);
  double hybrid = 0;
  double counts = 0;
  for (const auto& n : s.nodes) {
    hybrid += s.train_mse.at(n)[0];
    counts += s.counts_only_train.at(n);
  }
  EXPECT_LE(counts, hybrid);
}
