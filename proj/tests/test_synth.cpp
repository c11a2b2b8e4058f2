#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "delayprop/cases.hpp"
#include "delayprop/errors.hpp"
#include "delayprop/synth.hpp"
#include "oracles.hpp"

using namespace delayprop;

namespace {

const GroundTruth& scenario() {
  static const GroundTruth gt = default_scenario();
  return gt;
}

}  // namespace

TEST(Generate, ZeroCasesIsEmpty) {
  const auto d = generate(scenario(), 0, 1);
  EXPECT_TRUE(d.records.empty());
  EXPECT_TRUE(d.truth.empty());
}

TEST(Generate, DeterministicPerSeed) {
  const auto a = generate(scenario(), 200, 5);
  const auto b = generate(scenario(), 200, 5);
  std::ostringstream sa;
  std::ostringstream sb;
  write_records(sa, a.records);
  write_records(sb, b.records);
  EXPECT_EQ(sa.str(), sb.str());
  EXPECT_EQ(a.truth, b.truth);
  const auto c = generate(scenario(), 200, 6);
  EXPECT_NE(a.truth, c.truth);
}

TEST(Generate, EmittedValuesRediscretizeAndRecordsRederive) {
  const auto& gt = scenario();
  const auto& net = gt.network;
  const std::size_t n = 5000;
  const auto d = generate(gt, n, 11);
  ASSERT_EQ(d.records.size(), 2 * n);
  const auto table = ingest_records(d.records, {gt.emission.origin, gt.emission.destination, {}});
  ASSERT_EQ(table.size(), n);

  std::size_t emitted_mismatch = 0;
  std::size_t rederive_mismatch = 0;
  for (std::size_t c = 0; c < n; ++c) {
    for (std::size_t i = 0; i < net.size(); ++i) {
      const auto& v = net.variable(i);
      if (!v.is_binned()) continue;
      const double x = d.emitted[c][i];
      if (v.bins->bin_index(x) != static_cast<std::size_t>(d.truth[c][i])) ++emitted_mismatch;
      const auto col = table.column_index(v.name);
      ASSERT_TRUE(col) << v.name;
      const auto got = table.number(c, *col);
      if (!got || std::abs(*got - x) > 1.0 / 60) ++rederive_mismatch;
    }
  }
  EXPECT_EQ(emitted_mismatch, 0u);
  EXPECT_EQ(rederive_mismatch, 0u);

  // Round trip through the case pipeline.
  const auto enc = encode_cases(net, table);
  std::size_t same = 0;
  for (std::size_t k = 0; k < enc.cases.size(); ++k) {
    if (enc.cases[k] == d.truth[enc.source_rows[k]]) ++same;
  }
  EXPECT_GE(static_cast<double>(same), 0.999 * static_cast<double>(n));
}

TEST(Generate, RootMarginalsMatchTruth) {
  const auto& net = scenario().network;
  const std::size_t n = 20000;
  const auto d = generate(scenario(), n, 3);
  std::size_t roots = 0;
  for (std::size_t i = 0; i < net.size(); ++i) {
    if (!net.parents(i).empty()) continue;
    ++roots;
    std::vector<double> freq(net.variable(i).cardinality(), 0.0);
    for (const auto& a : d.truth) freq[static_cast<std::size_t>(a[i])] += 1.0 / static_cast<double>(n);
    EXPECT_LT(oracle::total_variation(freq, net.table(i).row_probabilities(0)), 0.02) << net.name(i);
  }
  EXPECT_GE(roots, 1u);
}

TEST(DefaultScenario, TwelveNodesAllReachGateInDest) {
  const auto& net = scenario().network;
  ASSERT_EQ(net.size(), 12u);
  const auto target = net.require("gate_in_dest");
  for (std::size_t i = 0; i < net.size(); ++i) {
    std::vector<std::size_t> stack{i};
    std::vector<bool> seen(net.size(), false);
    bool reached = false;
    while (!stack.empty()) {
      const auto u = stack.back();
      stack.pop_back();
      if (u == target) reached = true;
      if (seen[u]) continue;
      seen[u] = true;
      for (auto c : net.children(u)) stack.push_back(c);
    }
    EXPECT_TRUE(reached) << net.name(i);
  }
}

TEST(DefaultScenario, JsonRoundTrip) {
  const auto& gt = scenario();
  const auto back = ground_truth_from_json(to_json(gt));
  EXPECT_EQ(back.network.tables(), gt.network.tables());
  EXPECT_EQ(back.emission.origin, gt.emission.origin);
}

TEST(GroundTruthJson, RejectsMissingTables) {
  auto j = to_json(scenario());
  j.erase("tables");
  EXPECT_THROW(ground_truth_from_json(j), ConfigError);
}
