#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "delayprop/cases.hpp"
#include "delayprop/discretizer.hpp"
#include "delayprop/regression.hpp"

namespace delayprop {

// A discrete node: either a binned continuous quantity or a categorical one.
struct Variable {
  std::string name;
  std::optional<BinScheme> bins;
  std::vector<std::string> states;  // bin labels for binned variables

  static Variable binned(std::string name, BinScheme scheme);
  static Variable categorical(std::string name, std::vector<std::string> states);

  bool is_binned() const { return bins.has_value(); }
  std::size_t cardinality() const { return states.size(); }
  std::optional<std::size_t> state_index(const std::string& label) const;
};

struct PriorSource {
  enum class Kind { uniform, regression };
  Kind kind = Kind::uniform;
  std::optional<PiecewiseRegression> regression;

  static PriorSource uniform() { return {}; }
  static PriorSource from(PiecewiseRegression model) {
    return {Kind::regression, std::move(model)};
  }
};

struct NodeSpec {
  Variable variable;
  std::vector<std::string> parents;  // order fixes the CPT row layout
  PriorSource prior;
};

struct NetworkSpec {
  std::vector<NodeSpec> nodes;
  double case_weight = 30.0;     // weight of one observed case
  double prior_strength = 1.0;   // pseudo-count total of every prior row
  std::size_t max_rows = 1u << 20;
};

// Pseudo-counts for one node, one row per parent configuration. Rows are
// ordered lexicographically over parent states with the first parent most
// significant. Probabilities are the normalized pseudo-counts.
class ConditionalTable {
 public:
  ConditionalTable() = default;
  ConditionalTable(std::string node, std::vector<std::size_t> parent_cardinalities,
                   std::size_t states, std::vector<double> counts);

  const std::string& node() const { return node_; }
  std::size_t rows() const { return rows_; }
  std::size_t states() const { return states_; }
  const std::vector<std::size_t>& parent_cardinalities() const { return parent_cards_; }
  const std::vector<double>& counts() const { return counts_; }

  std::span<const double> row_counts(std::size_t row) const;
  double row_total(std::size_t row) const;
  double probability(std::size_t row, std::size_t state) const;
  std::vector<double> row_probabilities(std::size_t row) const;

  std::size_t row_index(std::span<const std::size_t> parent_states) const;
  std::vector<std::size_t> parent_states(std::size_t row) const;

  void add(std::size_t row, std::size_t state, double weight);

  friend bool operator==(const ConditionalTable&, const ConditionalTable&) = default;

 private:
  std::string node_;
  std::vector<std::size_t> parent_cards_;
  std::size_t states_ = 0;
  std::size_t rows_ = 0;
  std::vector<double> counts_;
};

// State index per network node; kMissing marks an unobserved node.
using Assignment = std::vector<int>;
inline constexpr int kMissing = -1;

class Network {
 public:
  std::size_t size() const { return variables_.size(); }
  const NetworkSpec& spec() const { return spec_; }
  const Variable& variable(std::size_t i) const { return variables_.at(i); }
  const std::string& name(std::size_t i) const { return variables_.at(i).name; }
  std::optional<std::size_t> index_of(const std::string& name) const;
  // Throws EvidenceError for unknown names.
  std::size_t require(const std::string& name) const;

  const std::vector<std::size_t>& parents(std::size_t i) const { return parents_.at(i); }
  const std::vector<std::size_t>& children(std::size_t i) const { return children_.at(i); }
  const std::vector<std::size_t>& topological_order() const { return order_; }
  std::vector<std::size_t> markov_blanket(std::size_t i) const;

  const ConditionalTable& table(std::size_t i) const { return tables_.at(i); }
  const std::vector<ConditionalTable>& tables() const { return tables_; }

  // Row of node i's table selected by the parent states in a.
  std::size_t row_of(std::size_t i, const Assignment& a) const;
  double conditional(std::size_t i, const Assignment& a) const;

  // Same structure, replaced tables. Throws ConfigError on shape mismatch or
  // rows with non-positive totals.
  Network with_tables(std::vector<ConditionalTable> tables) const;

 private:
  friend Network build_network(const NetworkSpec& spec);

  NetworkSpec spec_;
  std::vector<Variable> variables_;
  std::vector<std::vector<std::size_t>> parents_;
  std::vector<std::vector<std::size_t>> children_;
  std::vector<std::size_t> order_;
  std::vector<ConditionalTable> tables_;
};

// Validates the spec (unique names, known parents, acyclic, regression
// predictors among parents, row limit) and builds prior tables.
Network build_network(const NetworkSpec& spec);

// Discretizes a normal regression prior: for every parent configuration the
// mean is predicted at parent bin midpoints (labels for categorical parents)
// and each child bin receives its normal probability mass, tails absorbing
// the remainder. Pseudo-counts are strength times the probabilities.
ConditionalTable regression_to_cpt(const PiecewiseRegression& model, const Variable& child,
                                   std::span<const Variable* const> parents, double strength);

// Adds case_weight to the (parent row, state) pseudo-count for every case.
// Every case must assign the node and its parents; otherwise IncompleteCase
// is thrown before any count changes.
ConditionalTable dirichlet_update(const Network& network, std::size_t node,
                                  const ConditionalTable& table,
                                  std::span<const Assignment> cases, double case_weight);

// dirichlet_update applied to every node.
Network train(const Network& network, std::span<const Assignment> cases, double case_weight);

struct EncodedCases {
  std::vector<Assignment> cases;
  std::vector<EpochSeconds> timestamps;
  std::vector<std::size_t> source_rows;
  std::size_t dropped = 0;  // incomplete, out-of-range or unknown-label rows
};

// Maps case-table rows onto network states. Throws DataError when a node
// has no column.
EncodedCases encode_cases(const Network& network, const CaseTable& table);

}  // namespace delayprop
