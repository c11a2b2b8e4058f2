#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "delayprop/network.hpp"

namespace delayprop {

// A table over a set of network variables (ascending node index), stored
// row-major with the last variable varying fastest.
struct Factor {
  std::vector<std::size_t> vars;
  std::vector<std::size_t> cards;
  std::vector<double> values;

  static Factor scalar(double v) { return {{}, {}, {v}}; }
  double sum() const;
};

Factor multiply(const Factor& a, const Factor& b);
Factor sum_out(const Factor& f, std::size_t var);
// Node i's conditional table as a factor over {i} and its parents.
Factor cpt_factor(const Network& network, std::size_t node);

// node -> admissible states. A singleton is hard evidence; several states
// express interval findings ("between 15 and 30 minutes").
struct EvidenceSet {
  std::map<std::size_t, std::vector<bool>> admissible;

  // Throws EvidenceError for unknown nodes/states or an empty state set.
  static EvidenceSet from_labels(const Network& network,
                                 const std::map<std::string, std::vector<std::string>>& labels);
  void set(const Network& network, std::size_t node, std::span<const std::size_t> states);
  bool empty() const { return admissible.empty(); }
};

struct PosteriorSet {
  std::map<std::string, std::vector<double>> posteriors;
  std::map<std::string, double> expected;  // binned nodes only
  double evidence_logprob = 0.0;
};

// Greedy min-fill elimination order over the interaction graph of the given
// factors, ties broken by node name.
std::vector<std::size_t> min_fill_order(const Network& network, std::span<const Factor> factors,
                                        std::span<const std::size_t> eliminate);

// Exact marginals of the query nodes given the evidence, by variable
// elimination over the ancestral closure of query and evidence nodes.
// Throws InconsistentEvidence when P(evidence) = 0.
PosteriorSet posterior(const Network& network, const EvidenceSet& evidence,
                       std::span<const std::size_t> query);

// P(evidence) by variable elimination.
double evidence_probability(const Network& network, const EvidenceSet& evidence);

double expected_value(std::span<const double> p, const BinScheme& scheme);
// Argmax with ties toward the lower index.
std::size_t map_state(std::span<const double> p);

// Deterministic stream of doubles in [0, 1) from a 64-bit Mersenne twister.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  std::uint64_t bits() { return engine_(); }
  std::size_t categorical(std::span<const double> weights);

 private:
  std::mt19937_64 engine_;
};

// Ancestral sampling in topological order.
std::vector<Assignment> forward_sample(const Network& network, std::size_t n, std::uint64_t seed);

// Sum of ln P(state | parents); -inf when any factor is zero. A positive
// floor replaces smaller factors (for plotting).
double log_likelihood(const Network& network, const Assignment& a, double floor = 0.0);

// P(node | Markov blanket assignment in a). Throws IncompleteCase when the
// blanket is not fully assigned and InconsistentEvidence when it has zero
// probability.
std::vector<double> markov_blanket_distribution(const Network& network, const Assignment& a,
                                                std::size_t node);
double markov_blanket_mean(const Network& network, const Assignment& a, std::size_t node);

}  // namespace delayprop
