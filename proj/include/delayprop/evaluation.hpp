#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "delayprop/inference.hpp"
#include "delayprop/network.hpp"

namespace delayprop {

struct CaseSplit {
  std::vector<Assignment> train;  // timestamp < cutoff
  std::vector<Assignment> test;   // timestamp >= cutoff
  std::vector<std::string> warnings;
};

CaseSplit split_by_date(std::span<const Assignment> cases, std::span<const EpochSeconds> timestamps,
                        EpochSeconds cutoff);

// Actual bin (row) by predicted bin (column) counts.
class ConfusionMatrix {
 public:
  explicit ConfusionMatrix(std::size_t states = 0) : n_(states), counts_(states * states, 0) {}
  void add(std::size_t actual, std::size_t predicted) { ++counts_.at(actual * n_ + predicted); }
  std::size_t count(std::size_t actual, std::size_t predicted) const {
    return counts_.at(actual * n_ + predicted);
  }
  std::size_t states() const { return n_; }
  std::size_t total() const;
  double accuracy() const;

 private:
  std::size_t n_;
  std::vector<std::size_t> counts_;
};

// Mean squared distance between the midpoints of actual and predicted bins.
// Throws std::invalid_argument for empty or unequal-length input.
double approx_mse(std::span<const std::size_t> actual, std::span<const std::size_t> predicted,
                  const BinScheme& scheme);

// (mse - min) / (max - min) per weight. Throws std::invalid_argument when
// fewer than two distinct values are present.
std::map<double, double> scaled_mse(const std::map<double, double>& mse_by_weight);

struct NodeEvaluation {
  std::string node;
  ConfusionMatrix confusion;
  double approx_mse = 0.0;
  double mean = 0.0;  // of actual bin midpoints
  double std = 0.0;
  std::size_t cases = 0;
  std::size_t skipped = 0;  // zero-probability Markov blankets
};

// For every binned node and case, predicts the MAP bin of the node given the
// rest of the case (its Markov blanket) and scores it against the actual bin.
std::vector<NodeEvaluation> evaluate_predictions(const Network& network,
                                                 std::span<const Assignment> cases);

struct SweepResult {
  std::vector<double> weights;
  std::vector<std::string> nodes;  // binned nodes, network order
  std::map<std::string, std::vector<double>> train_mse;  // aligned with weights
  std::map<std::string, std::vector<double>> test_mse;
  std::map<std::string, double> regression_only_train;
  std::map<std::string, double> regression_only_test;
  std::map<std::string, double> counts_only_train;
  std::map<std::string, double> counts_only_test;
  double counts_only_weight = 0.0;
};

// Trains from the spec's prior tables at each case weight and scores every
// binned node on train and test. Also scores the untrained prior
// (regression only) and a uniform-prior model trained at counts_only_weight
// (<= 0 selects the spec's case_weight).
SweepResult weight_sweep(const NetworkSpec& spec, std::span<const Assignment> train,
                         std::span<const Assignment> test, std::span<const double> weights,
                         double counts_only_weight = 0.0);

struct BlanketError {
  double mse = 0.0;
  std::size_t cases = 0;
  std::size_t skipped = 0;
};

// Mean of (observed midpoint - E[node | Markov blanket])^2 per binned node.
std::map<std::string, BlanketError> blanket_sq_error(const Network& network,
                                                     std::span<const Assignment> cases);

// Two-sample Kolmogorov-Smirnov statistic. Both samples must be nonempty.
double ks_statistic(std::vector<double> a, std::vector<double> b);

struct LikelihoodComparison {
  std::vector<double> holdout;    // finite log-likelihoods
  std::vector<double> generated;  // finite log-likelihoods
  std::size_t holdout_neg_inf = 0;
  std::size_t generated_neg_inf = 0;
  double ks = 0.0;
};

// Log-likelihoods of the holdout and of n_generated forward samples, with
// -inf values counted apart. floor > 0 is passed to log_likelihood.
LikelihoodComparison ll_comparison(const Network& network, std::span<const Assignment> holdout,
                                   std::size_t n_generated, std::uint64_t seed, double floor = 0.0);

// CSV writers for external plotting.
void write_confusion_csv(std::ostream& out, const Network& network,
                         const std::vector<NodeEvaluation>& evals);
void write_sweep_csv(std::ostream& out, const SweepResult& sweep);

// Minimal SVG charts: MSE against case weight (log x axis) and overlaid
// log-likelihood histograms.
void write_sweep_svg(std::ostream& out, const SweepResult& sweep, bool test_sample);
void write_ll_histogram_svg(std::ostream& out, const LikelihoodComparison& ll);

}  // namespace delayprop
