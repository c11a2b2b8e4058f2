#include "delayprop/network.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <set>
#include <stdexcept>

#include "delayprop/errors.hpp"

namespace delayprop {

namespace {

// Upper-tail normal probability, accurate far into either tail.
double normal_sf(double z) { return 0.5 * std::erfc(z / std::sqrt(2.0)); }

// P(lo <= X < hi) for X ~ N(mu, sigma).
double normal_mass(double lo, double hi, double mu, double sigma) {
  const double zl = (lo - mu) / sigma;
  const double zh = (hi - mu) / sigma;
  if (zl >= 0.0) return normal_sf(zl) - normal_sf(zh);
  if (zh <= 0.0) return normal_sf(-zh) - normal_sf(-zl);
  return 1.0 - normal_sf(-zl) - normal_sf(zh);
}

}  // namespace

Variable Variable::binned(std::string name, BinScheme scheme) {
  Variable v;
  v.name = std::move(name);
  v.states = scheme.labels();
  v.bins = std::move(scheme);
  return v;
}

Variable Variable::categorical(std::string name, std::vector<std::string> states) {
  Variable v;
  v.name = std::move(name);
  v.states = std::move(states);
  return v;
}

std::optional<std::size_t> Variable::state_index(const std::string& label) const {
  auto it = std::find(states.begin(), states.end(), label);
  if (it == states.end()) return std::nullopt;
  return static_cast<std::size_t>(it - states.begin());
}

ConditionalTable::ConditionalTable(std::string node, std::vector<std::size_t> parent_cardinalities,
                                   std::size_t states, std::vector<double> counts)
    : node_(std::move(node)), parent_cards_(std::move(parent_cardinalities)), states_(states),
      counts_(std::move(counts)) {
  rows_ = 1;
  for (auto c : parent_cards_) rows_ *= c;
  if (states_ == 0 || counts_.size() != rows_ * states_) {
    throw ConfigError("table for '" + node_ + "' has " + std::to_string(counts_.size()) +
                      " entries, expected " + std::to_string(rows_ * states_));
  }
  for (std::size_t r = 0; r < rows_; ++r) {
    for (double c : row_counts(r)) {
      if (!(c >= 0.0) || !std::isfinite(c)) {
        throw ConfigError("table for '" + node_ + "' has a negative or non-finite pseudo-count");
      }
    }
    if (!(row_total(r) > 0.0)) {
      throw ConfigError("table for '" + node_ + "' row " + std::to_string(r) + " sums to zero");
    }
  }
}

std::span<const double> ConditionalTable::row_counts(std::size_t row) const {
  return std::span<const double>(counts_).subspan(row * states_, states_);
}

double ConditionalTable::row_total(std::size_t row) const {
  const auto r = row_counts(row);
  return std::accumulate(r.begin(), r.end(), 0.0);
}

double ConditionalTable::probability(std::size_t row, std::size_t state) const {
  return counts_.at(row * states_ + state) / row_total(row);
}

std::vector<double> ConditionalTable::row_probabilities(std::size_t row) const {
  const auto r = row_counts(row);
  const double total = std::accumulate(r.begin(), r.end(), 0.0);
  std::vector<double> p(r.begin(), r.end());
  for (double& x : p) x /= total;
  return p;
}

std::size_t ConditionalTable::row_index(std::span<const std::size_t> parent_states) const {
  if (parent_states.size() != parent_cards_.size()) {
    throw std::invalid_argument("wrong number of parent states for '" + node_ + "'");
  }
  std::size_t row = 0;
  for (std::size_t p = 0; p < parent_cards_.size(); ++p) {
    if (parent_states[p] >= parent_cards_[p]) throw std::out_of_range("parent state out of range");
    row = row * parent_cards_[p] + parent_states[p];
  }
  return row;
}

std::vector<std::size_t> ConditionalTable::parent_states(std::size_t row) const {
  std::vector<std::size_t> s(parent_cards_.size());
  for (std::size_t p = parent_cards_.size(); p-- > 0;) {
    s[p] = row % parent_cards_[p];
    row /= parent_cards_[p];
  }
  return s;
}

void ConditionalTable::add(std::size_t row, std::size_t state, double weight) {
  counts_.at(row * states_ + state) += weight;
}

std::optional<std::size_t> Network::index_of(const std::string& name) const {
  for (std::size_t i = 0; i < variables_.size(); ++i) {
    if (variables_[i].name == name) return i;
  }
  return std::nullopt;
}

std::size_t Network::require(const std::string& name) const {
  auto i = index_of(name);
  if (!i) throw EvidenceError("unknown node '" + name + "'");
  return *i;
}

std::vector<std::size_t> Network::markov_blanket(std::size_t i) const {
  std::set<std::size_t> mb(parents_.at(i).begin(), parents_.at(i).end());
  for (auto c : children_.at(i)) {
    mb.insert(c);
    for (auto p : parents_[c]) mb.insert(p);
  }
  mb.erase(i);
  return {mb.begin(), mb.end()};
}

std::size_t Network::row_of(std::size_t i, const Assignment& a) const {
  std::size_t row = 0;
  for (auto p : parents_.at(i)) {
    const int s = a.at(p);
    if (s < 0) throw IncompleteCase(0, variables_[p].name);
    row = row * variables_[p].cardinality() + static_cast<std::size_t>(s);
  }
  return row;
}

double Network::conditional(std::size_t i, const Assignment& a) const {
  const int s = a.at(i);
  if (s < 0) throw IncompleteCase(0, variables_[i].name);
  return tables_[i].probability(row_of(i, a), static_cast<std::size_t>(s));
}

Network Network::with_tables(std::vector<ConditionalTable> tables) const {
  if (tables.size() != tables_.size()) throw ConfigError("wrong number of tables");
  for (std::size_t i = 0; i < tables.size(); ++i) {
    if (tables[i].node() != tables_[i].node() ||
        tables[i].parent_cardinalities() != tables_[i].parent_cardinalities() ||
        tables[i].states() != tables_[i].states()) {
      throw ConfigError("table for '" + tables_[i].node() + "' does not match the network shape");
    }
  }
  Network out = *this;
  out.tables_ = std::move(tables);
  return out;
}

ConditionalTable regression_to_cpt(const PiecewiseRegression& model, const Variable& child,
                                   std::span<const Variable* const> parents, double strength) {
  if (!child.is_binned()) throw ConfigError("regression prior needs a binned child: " + child.name);
  if (!(model.sigma > 0.0)) throw ConfigError("regression sigma must be > 0 for " + child.name);
  if (!(strength > 0.0)) throw ConfigError("prior strength must be > 0");
  for (const auto& pred : model.predictors()) {
    const bool found = std::any_of(parents.begin(), parents.end(),
                                   [&](const Variable* v) { return v->name == pred; });
    if (!found) {
      throw ConfigError("predictor '" + pred + "' of '" + child.name + "' is not a parent");
    }
  }
  std::map<std::string, bool> continuous_term;
  for (const auto& t : model.terms) {
    continuous_term[t.predictor] = t.kind != RegressionTerm::Kind::categorical;
  }

  const BinScheme& scheme = *child.bins;
  std::vector<std::size_t> cards;
  for (const auto* p : parents) cards.push_back(p->cardinality());
  std::size_t rows = 1;
  for (auto c : cards) rows *= c;
  const std::size_t k = child.cardinality();
  std::vector<double> counts(rows * k);

  std::vector<std::size_t> states(parents.size(), 0);
  for (std::size_t row = 0; row < rows; ++row) {
    std::map<std::string, PredictorValue> values;
    for (std::size_t p = 0; p < parents.size(); ++p) {
      const Variable& v = *parents[p];
      auto term = continuous_term.find(v.name);
      if (term == continuous_term.end()) continue;
      if (v.is_binned()) {
        values[v.name] = v.bins->midpoint(states[p]);
      } else if (term->second) {
        const auto& label = v.states[states[p]];
        try {
          values[v.name] = std::stod(label);
        } catch (const std::exception&) {
          throw ConfigError("categorical parent '" + v.name + "' state '" + label +
                            "' is not numeric but the prior treats it as continuous");
        }
      } else {
        values[v.name] = v.states[states[p]];
      }
    }
    const double mu = predict_mean(model, values);
    double total = 0.0;
    for (std::size_t s = 0; s < k; ++s) {
      const double pr = normal_mass(scheme.lower(s), scheme.upper(s), mu, model.sigma);
      counts[row * k + s] = pr;
      total += pr;
    }
    if (total > 0.0) {
      for (std::size_t s = 0; s < k; ++s) counts[row * k + s] *= strength / total;
    } else {
      // Closed tails with the mean far outside the range: all mass on the nearest bin.
      const std::size_t s = mu < scheme.edges().front() ? 0 : k - 1;
      counts[row * k + s] = strength;
    }

    for (std::size_t p = parents.size(); p-- > 0;) {
      if (++states[p] < cards[p]) break;
      states[p] = 0;
    }
  }
  return ConditionalTable(child.name, std::move(cards), k, std::move(counts));
}

Network build_network(const NetworkSpec& spec) {
  if (spec.nodes.empty()) throw ConfigError("network has no nodes");
  if (!(spec.case_weight > 0.0)) throw ConfigError("case_weight must be > 0");
  if (!(spec.prior_strength > 0.0)) throw ConfigError("prior_strength must be > 0");

  Network net;
  net.spec_ = spec;
  const std::size_t n = spec.nodes.size();
  std::map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < n; ++i) {
    const auto& v = spec.nodes[i].variable;
    if (v.name.empty()) throw ConfigError("node with empty name");
    if (!index.emplace(v.name, i).second) throw ConfigError("duplicate node '" + v.name + "'");
    if (v.cardinality() < 2) throw ConfigError("node '" + v.name + "' needs at least 2 states");
    std::set<std::string> distinct(v.states.begin(), v.states.end());
    if (distinct.size() != v.states.size()) {
      throw ConfigError("node '" + v.name + "' has duplicate state labels");
    }
    net.variables_.push_back(v);
  }
  net.parents_.resize(n);
  net.children_.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::set<std::string> seen;
    for (const auto& p : spec.nodes[i].parents) {
      auto it = index.find(p);
      if (it == index.end()) {
        throw ConfigError("node '" + net.variables_[i].name + "' has unknown parent '" + p + "'");
      }
      if (it->second == i) throw ConfigError("node '" + p + "' is its own parent (cycle)");
      if (!seen.insert(p).second) throw ConfigError("duplicate parent '" + p + "'");
      net.parents_[i].push_back(it->second);
      net.children_[it->second].push_back(i);
    }
  }

  // Kahn's algorithm, always taking the earliest-declared ready node.
  std::vector<std::size_t> indegree(n);
  for (std::size_t i = 0; i < n; ++i) indegree[i] = net.parents_[i].size();
  std::set<std::size_t> ready;
  for (std::size_t i = 0; i < n; ++i) {
    if (indegree[i] == 0) ready.insert(i);
  }
  while (!ready.empty()) {
    const auto i = *ready.begin();
    ready.erase(ready.begin());
    net.order_.push_back(i);
    for (auto c : net.children_[i]) {
      if (--indegree[c] == 0) ready.insert(c);
    }
  }
  if (net.order_.size() != n) {
    std::string members;
    for (std::size_t i = 0; i < n; ++i) {
      if (indegree[i] > 0) members += (members.empty() ? "" : ", ") + net.variables_[i].name;
    }
    throw ConfigError("parent graph has a cycle through: " + members);
  }

  for (std::size_t i = 0; i < n; ++i) {
    const auto& node = spec.nodes[i];
    std::vector<std::size_t> cards;
    std::size_t rows = 1;
    for (auto p : net.parents_[i]) {
      const auto c = net.variables_[p].cardinality();
      if (rows > spec.max_rows / c) {
        throw ConfigError("table for '" + node.variable.name + "' exceeds the row limit of " +
                          std::to_string(spec.max_rows));
      }
      rows *= c;
      cards.push_back(c);
    }
    if (node.prior.kind == PriorSource::Kind::regression) {
      if (!node.prior.regression) throw ConfigError("regression prior without a model");
      std::vector<const Variable*> parent_vars;
      for (auto p : net.parents_[i]) parent_vars.push_back(&net.variables_[p]);
      net.tables_.push_back(regression_to_cpt(*node.prior.regression, node.variable, parent_vars,
                                              spec.prior_strength));
    } else {
      const auto k = node.variable.cardinality();
      std::vector<double> counts(rows * k, spec.prior_strength / static_cast<double>(k));
      net.tables_.emplace_back(node.variable.name, std::move(cards), k, std::move(counts));
    }
  }
  return net;
}

ConditionalTable dirichlet_update(const Network& network, std::size_t node,
                                  const ConditionalTable& table,
                                  std::span<const Assignment> cases, double case_weight) {
  if (!(case_weight > 0.0)) throw std::invalid_argument("case_weight must be > 0");
  const auto& parents = network.parents(node);
  for (std::size_t c = 0; c < cases.size(); ++c) {
    const auto& a = cases[c];
    if (a.size() != network.size()) throw IncompleteCase(c, network.name(node));
    if (a[node] < 0) throw IncompleteCase(c, network.name(node));
    for (auto p : parents) {
      if (a[p] < 0) throw IncompleteCase(c, network.name(p));
    }
  }
  ConditionalTable out = table;
  for (const auto& a : cases) {
    out.add(network.row_of(node, a), static_cast<std::size_t>(a[node]), case_weight);
  }
  return out;
}

Network train(const Network& network, std::span<const Assignment> cases, double case_weight) {
  std::vector<ConditionalTable> tables;
  tables.reserve(network.size());
  for (std::size_t i = 0; i < network.size(); ++i) {
    tables.push_back(dirichlet_update(network, i, network.table(i), cases, case_weight));
  }
  return network.with_tables(std::move(tables));
}

EncodedCases encode_cases(const Network& network, const CaseTable& table) {
  std::vector<std::size_t> cols;
  for (std::size_t i = 0; i < network.size(); ++i) {
    auto c = table.column_index(network.name(i));
    if (!c) throw DataError("case table has no column for node '" + network.name(i) + "'");
    cols.push_back(*c);
  }
  EncodedCases out;
  for (std::size_t r = 0; r < table.size(); ++r) {
    Assignment a(network.size(), kMissing);
    bool ok = true;
    for (std::size_t i = 0; i < network.size() && ok; ++i) {
      const auto& v = network.variable(i);
      if (v.is_binned()) {
        auto x = table.number(r, cols[i]);
        if (!x) {
          ok = false;
          break;
        }
        try {
          a[i] = static_cast<int>(v.bins->bin_index(*x));
        } catch (const std::out_of_range&) {
          ok = false;
        }
      } else {
        auto s = v.state_index(table.rows[r][cols[i]]);
        if (!s) {
          ok = false;
          break;
        }
        a[i] = static_cast<int>(*s);
      }
    }
    if (!ok) {
      ++out.dropped;
      continue;
    }
    out.cases.push_back(std::move(a));
    out.timestamps.push_back(table.timestamps[r]);
    out.source_rows.push_back(r);
  }
  return out;
}

}  // namespace delayprop
