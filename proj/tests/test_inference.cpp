#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <numeric>

#include "delayprop/errors.hpp"
#include "delayprop/inference.hpp"
#include "oracles.hpp"

using namespace delayprop;

namespace {

Network chain_abc() {
  NetworkSpec spec;
  spec.nodes.push_back({Variable::categorical("A", {"0", "1"}), {}, {}});
  spec.nodes.push_back({Variable::binned("B", BinScheme({0, 15, 30}, false, false)), {"A"}, {}});
  spec.nodes.push_back({Variable::categorical("C", {"0", "1", "2"}), {"B"}, {}});
  spec.nodes.push_back({Variable::categorical("D", {"0", "1"}), {"A"}, {}});
  const auto base = build_network(spec);
  return base.with_tables({ConditionalTable("A", {}, 2, {0.3, 0.7}),
                           ConditionalTable("B", {2}, 2, {0.9, 0.1, 0.2, 0.8}),
                           ConditionalTable("C", {2}, 3, {0.5, 0.3, 0.2, 0.1, 0.1, 0.8}),
                           ConditionalTable("D", {2}, 2, {0.6, 0.4, 0.25, 0.75})});
}

std::vector<std::size_t> all_nodes(const Network& net) {
  std::vector<std::size_t> v(net.size());
  std::iota(v.begin(), v.end(), 0);
  return v;
}

// Random evidence on up to two nodes; some of it multi-state.
oracle::Masks random_masks(const Network& net, std::mt19937_64& rng) {
  oracle::Masks m;
  const std::size_t k = rng() % 3;
  for (std::size_t e = 0; e < k; ++e) {
    const std::size_t node = rng() % net.size();
    std::vector<bool> mask(net.variable(node).cardinality(), false);
    mask[rng() % mask.size()] = true;
    if (rng() % 2) mask[rng() % mask.size()] = true;
    m[node] = mask;
  }
  return m;
}

EvidenceSet to_evidence(const oracle::Masks& m) {
  EvidenceSet ev;
  ev.admissible = m;
  return ev;
}

}  // namespace

TEST(Posterior, RootWithoutEvidenceIsPrior) {
  const auto net = chain_abc();
  const std::size_t q[] = {0};
  const auto p = posterior(net, {}, q);
  EXPECT_NEAR(p.posteriors.at("A")[0], 0.3, 1e-15);
  EXPECT_NEAR(p.evidence_logprob, 0.0, 1e-15);
}

TEST(Posterior, BackwardQueryMatchesBayes) {
  const auto net = chain_abc();
  const auto ev = EvidenceSet::from_labels(net, {{"B", {"[15,30)"}}});
  const std::size_t q[] = {0};
  const auto p = posterior(net, ev, q);
  const double pb = 0.3 * 0.1 + 0.7 * 0.8;
  EXPECT_NEAR(p.posteriors.at("A")[0], 0.3 * 0.1 / pb, 1e-12);
  EXPECT_NEAR(p.evidence_logprob, std::log(pb), 1e-12);
  EXPECT_EQ(p.expected.count("A"), 0u);
}

TEST(Posterior, FullStateSpaceEvidenceEqualsNoEvidence) {
  const auto net = chain_abc();
  const auto q = all_nodes(net);
  const auto none = posterior(net, {}, q);
  const auto full = posterior(net, EvidenceSet::from_labels(net, {{"C", {"0", "1", "2"}}}), q);
  for (const auto& [name, v] : none.posteriors) {
    for (std::size_t s = 0; s < v.size(); ++s) EXPECT_NEAR(v[s], full.posteriors.at(name)[s], 1e-15);
  }
  EXPECT_NEAR(full.evidence_logprob, 0.0, 1e-15);
}

TEST(Posterior, ZeroProbabilityEvidenceThrows) {
  NetworkSpec spec;
  spec.nodes.push_back({Variable::categorical("A", {"0", "1"}), {}, {}});
  const auto net = build_network(spec).with_tables({ConditionalTable("A", {}, 2, {1.0, 0.0})});
  const std::size_t q[] = {0};
  EXPECT_THROW(posterior(net, EvidenceSet::from_labels(net, {{"A", {"1"}}}), q), InconsistentEvidence);
}

TEST(Posterior, EvidenceErrors) {
  const auto net = chain_abc();
  EXPECT_THROW(EvidenceSet::from_labels(net, {{"Z", {"0"}}}), EvidenceError);
  EXPECT_THROW(EvidenceSet::from_labels(net, {{"A", {"7"}}}), EvidenceError);
  EXPECT_THROW(EvidenceSet::from_labels(net, {{"A", {}}}), EvidenceError);
}

TEST(PosteriorProperty, MatchesJointEnumerationOnRandomNetworks) {
  std::mt19937_64 rng(77);
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const auto net = oracle::random_network(seed);
    const auto masks = random_masks(net, rng);
    const auto q = all_nodes(net);
    const double z = oracle::evidence_probability(net, masks);
    const auto ev = to_evidence(masks);
    if (z <= 0) continue;
    const auto p = posterior(net, ev, q);
    EXPECT_NEAR(std::exp(p.evidence_logprob), z, 1e-9);
    EXPECT_NEAR(evidence_probability(net, ev), z, 1e-9);
    for (std::size_t i = 0; i < net.size(); ++i) {
      const auto want = oracle::posterior(net, masks, i);
      const auto& got = p.posteriors.at(net.name(i));
      double sum = 0;
      for (std::size_t s = 0; s < want.size(); ++s) {
        EXPECT_NEAR(got[s], want[s], 1e-9) << "seed " << seed << " node " << i;
        sum += got[s];
      }
      EXPECT_NEAR(sum, 1.0, 1e-9);
      EXPECT_EQ(map_state(got), map_state(want));
    }
  }
}

TEST(PosteriorProperty, ExpectedValueWithinMidpointRange) {
  const auto net = chain_abc();
  const auto q = all_nodes(net);
  for (const char* c : {"0", "1", "2"}) {
    const auto p = posterior(net, EvidenceSet::from_labels(net, {{"C", {c}}}), q);
    EXPECT_GE(p.expected.at("B"), 7.5);
    EXPECT_LE(p.expected.at("B"), 22.5);
  }
}

TEST(ExpectedValue, Examples) {
  const auto s = BinScheme({0, 15, 30}, false, false);
  EXPECT_DOUBLE_EQ(expected_value(std::vector<double>{0, 1}, s), 22.5);
  EXPECT_DOUBLE_EQ(expected_value(std::vector<double>{0.5, 0.5}, s), 15.0);
  const auto sym = BinScheme::uniform(-30, 30, 15);
  std::vector<double> u(sym.size(), 1.0 / static_cast<double>(sym.size()));
  EXPECT_NEAR(expected_value(u, sym), 0.0, 1e-12);
  EXPECT_THROW(expected_value(std::vector<double>{1}, s), std::invalid_argument);
}

TEST(MapState, Examples) {
  EXPECT_EQ(map_state(std::vector<double>{0.2, 0.7, 0.1}), 1u);
  EXPECT_EQ(map_state(std::vector<double>{0.5, 0.5}), 0u);
}

TEST(ForwardSample, EmptyDeterministicAndBinomial) {
  NetworkSpec spec;
  spec.nodes.push_back({Variable::categorical("A", {"0", "1"}), {}, {}});
  const auto net = build_network(spec).with_tables({ConditionalTable("A", {}, 2, {0.3, 0.7})});
  EXPECT_TRUE(forward_sample(net, 0, 1).empty());
  const auto xs = forward_sample(net, 10000, 1);
  double ones = 0;
  for (const auto& a : xs) ones += a[0];
  EXPECT_NEAR(ones / 10000, 0.7, 0.02);
  EXPECT_EQ(forward_sample(net, 500, 9), forward_sample(net, 500, 9));
  EXPECT_NE(forward_sample(net, 500, 9), forward_sample(net, 500, 10));
}

TEST(ForwardSampleProperty, MarginalsConvergeToExact) {
  for (std::uint64_t seed : {3u, 4u, 5u}) {
    const auto net = oracle::random_network(seed);
    const auto xs = forward_sample(net, 50000, seed);
    const auto q = all_nodes(net);
    const auto exact = posterior(net, {}, q);
    for (std::size_t i = 0; i < net.size(); ++i) {
      std::vector<double> freq(net.variable(i).cardinality(), 0.0);
      for (const auto& a : xs) freq[static_cast<std::size_t>(a[i])] += 1.0 / 50000;
      EXPECT_LT(oracle::total_variation(freq, exact.posteriors.at(net.name(i))), 0.02);
    }
  }
}

TEST(LogLikelihood, Examples) {
  NetworkSpec spec;
  spec.nodes.push_back({Variable::categorical("A", {"0", "1", "2", "3"}), {}, {}});
  const auto uniform = build_network(spec);
  EXPECT_NEAR(log_likelihood(uniform, {2}), std::log(0.25), 1e-12);

  const auto det = uniform.with_tables({ConditionalTable("A", {}, 4, {0, 0, 1, 0})});
  EXPECT_DOUBLE_EQ(log_likelihood(det, {2}), 0.0);
  EXPECT_EQ(log_likelihood(det, {1}), -std::numeric_limits<double>::infinity());
  EXPECT_DOUBLE_EQ(log_likelihood(det, {1}, 1e-9), std::log(1e-9));
}

TEST(LogLikelihoodProperty, EqualsLogOfEnumeratedJoint) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto net = oracle::random_network(seed);
    for (const auto& a : forward_sample(net, 5, seed)) {
      EXPECT_NEAR(log_likelihood(net, a), std::log(oracle::joint_probability(net, a)), 1e-9);
    }
  }
}

TEST(MarkovBlanket, MatchesFullConditional) {
  const auto net = chain_abc();
  for (const auto& a : forward_sample(net, 30, 2)) {
    for (std::size_t i = 0; i < net.size(); ++i) {
      const auto want = oracle::full_conditional(net, a, i);
      const auto got = markov_blanket_distribution(net, a, i);
      for (std::size_t s = 0; s < want.size(); ++s) EXPECT_NEAR(got[s], want[s], 1e-12);
    }
  }
  for (std::uint64_t seed = 20; seed < 40; ++seed) {
    const auto r = oracle::random_network(seed);
    const auto a = forward_sample(r, 1, seed).front();
    for (std::size_t i = 0; i < r.size(); ++i) {
      const auto want = oracle::full_conditional(r, a, i);
      const auto got = markov_blanket_distribution(r, a, i);
      for (std::size_t s = 0; s < want.size(); ++s) EXPECT_NEAR(got[s], want[s], 1e-12);
    }
  }
}

TEST(MarkovBlanket, NonBlanketValuesDoNotMatter) {
  const auto net = chain_abc();
  // Blanket of B is {A, C}; D is outside.
  Assignment a{1, 0, 2, 0};
  const double m = markov_blanket_mean(net, a, 1);
  a[3] = 1;
  EXPECT_DOUBLE_EQ(markov_blanket_mean(net, a, 1), m);
  a[3] = kMissing;
  EXPECT_DOUBLE_EQ(markov_blanket_mean(net, a, 1), m);
  a[2] = kMissing;
  EXPECT_THROW(markov_blanket_mean(net, a, 1), IncompleteCase);
}

TEST(MarkovBlanket, IsolatedNodeGivesPriorMean) {
  NetworkSpec spec;
  spec.nodes.push_back({Variable::binned("B", BinScheme({0, 15, 30}, false, false)), {}, {}});
  spec.nodes.push_back({Variable::categorical("X", {"0", "1"}), {}, {}});
  const auto net = build_network(spec).with_tables(
      {ConditionalTable("B", {}, 2, {0.25, 0.75}), ConditionalTable("X", {}, 2, {0.5, 0.5})});
  EXPECT_DOUBLE_EQ(markov_blanket_mean(net, {0, 1}, 0), 0.25 * 7.5 + 0.75 * 22.5);
}

TEST(MarkovBlanket, ZeroProbabilityBlanketThrows) {
  NetworkSpec spec;
  spec.nodes.push_back({Variable::categorical("A", {"0", "1"}), {}, {}});
  spec.nodes.push_back({Variable::categorical("B", {"0", "1"}), {"A"}, {}});
  const auto net = build_network(spec).with_tables(
      {ConditionalTable("A", {}, 2, {0.5, 0.5}), ConditionalTable("B", {2}, 2, {1, 0, 1, 0})});
  EXPECT_THROW(markov_blanket_distribution(net, {0, 1}, 0), InconsistentEvidence);
}

TEST(MinFill, OrderIsDeterministicAndCoversAll) {
  const auto net = oracle::random_network(8);
  std::vector<Factor> fs;
  for (std::size_t i = 0; i < net.size(); ++i) fs.push_back(cpt_factor(net, i));
  const auto all = all_nodes(net);
  const auto o1 = min_fill_order(net, fs, all);
  EXPECT_EQ(o1, min_fill_order(net, fs, all));
  auto sorted = o1;
  std::sort(sorted.begin(), sorted.end());
  EXPECT_EQ(sorted, all);
}
