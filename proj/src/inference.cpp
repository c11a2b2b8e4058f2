#include "delayprop/inference.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>
#include <stdexcept>

#include "delayprop/errors.hpp"

namespace delayprop {

namespace {

std::vector<std::size_t> strides_of(const Factor& f) {
  std::vector<std::size_t> s(f.vars.size());
  std::size_t stride = 1;
  for (std::size_t i = f.vars.size(); i-- > 0;) {
    s[i] = stride;
    stride *= f.cards[i];
  }
  return s;
}

std::vector<std::size_t> ancestral_closure(const Network& net, std::set<std::size_t> seeds) {
  std::vector<std::size_t> stack(seeds.begin(), seeds.end());
  while (!stack.empty()) {
    const auto i = stack.back();
    stack.pop_back();
    for (auto p : net.parents(i)) {
      if (seeds.insert(p).second) stack.push_back(p);
    }
  }
  return {seeds.begin(), seeds.end()};
}

Factor indicator(const Network& net, std::size_t node, const std::vector<bool>& mask) {
  Factor f{{node}, {net.variable(node).cardinality()}, {}};
  for (bool b : mask) f.values.push_back(b ? 1.0 : 0.0);
  return f;
}

// Eliminates every variable in `order` and returns the product of what remains.
Factor eliminate(std::vector<Factor> factors, const std::vector<std::size_t>& order) {
  for (auto v : order) {
    Factor joined = Factor::scalar(1.0);
    std::vector<Factor> rest;
    rest.reserve(factors.size());
    for (auto& f : factors) {
      if (std::binary_search(f.vars.begin(), f.vars.end(), v)) {
        joined = multiply(joined, f);
      } else {
        rest.push_back(std::move(f));
      }
    }
    rest.push_back(sum_out(joined, v));
    factors = std::move(rest);
  }
  Factor result = Factor::scalar(1.0);
  for (const auto& f : factors) result = multiply(result, f);
  return result;
}

std::vector<Factor> model_factors(const Network& net, const std::vector<std::size_t>& nodes,
                                  const EvidenceSet& evidence) {
  std::vector<Factor> factors;
  for (auto i : nodes) factors.push_back(cpt_factor(net, i));
  for (const auto& [node, mask] : evidence.admissible) {
    factors.push_back(indicator(net, node, mask));
  }
  return factors;
}

}  // namespace

double Factor::sum() const { return std::accumulate(values.begin(), values.end(), 0.0); }

Factor multiply(const Factor& a, const Factor& b) {
  Factor out;
  std::set_union(a.vars.begin(), a.vars.end(), b.vars.begin(), b.vars.end(),
                 std::back_inserter(out.vars));
  const std::size_t n = out.vars.size();
  out.cards.resize(n);
  std::vector<std::size_t> sa(n, 0);
  std::vector<std::size_t> sb(n, 0);
  const auto stride_a = strides_of(a);
  const auto stride_b = strides_of(b);
  std::size_t total = 1;
  for (std::size_t k = 0; k < n; ++k) {
    const auto v = out.vars[k];
    auto ia = std::lower_bound(a.vars.begin(), a.vars.end(), v);
    auto ib = std::lower_bound(b.vars.begin(), b.vars.end(), v);
    if (ia != a.vars.end() && *ia == v) {
      const auto pos = static_cast<std::size_t>(ia - a.vars.begin());
      out.cards[k] = a.cards[pos];
      sa[k] = stride_a[pos];
    }
    if (ib != b.vars.end() && *ib == v) {
      const auto pos = static_cast<std::size_t>(ib - b.vars.begin());
      if (sa[k] == 0) {
        out.cards[k] = b.cards[pos];
      } else if (out.cards[k] != b.cards[pos]) {
        throw std::logic_error("factor cardinality mismatch");
      }
      sb[k] = stride_b[pos];
    }
    total *= out.cards[k];
  }
  out.values.resize(total);
  std::vector<std::size_t> counter(n, 0);
  std::size_t ia = 0;
  std::size_t ib = 0;
  for (std::size_t i = 0; i < total; ++i) {
    out.values[i] = a.values[ia] * b.values[ib];
    for (std::size_t k = n; k-- > 0;) {
      ++counter[k];
      ia += sa[k];
      ib += sb[k];
      if (counter[k] < out.cards[k]) break;
      ia -= sa[k] * out.cards[k];
      ib -= sb[k] * out.cards[k];
      counter[k] = 0;
    }
  }
  return out;
}

Factor sum_out(const Factor& f, std::size_t var) {
  auto it = std::lower_bound(f.vars.begin(), f.vars.end(), var);
  if (it == f.vars.end() || *it != var) return f;
  const auto pos = static_cast<std::size_t>(it - f.vars.begin());
  std::size_t outer = 1;
  std::size_t inner = 1;
  for (std::size_t k = 0; k < pos; ++k) outer *= f.cards[k];
  for (std::size_t k = pos + 1; k < f.vars.size(); ++k) inner *= f.cards[k];
  const std::size_t card = f.cards[pos];
  Factor out;
  out.vars = f.vars;
  out.cards = f.cards;
  out.vars.erase(out.vars.begin() + static_cast<std::ptrdiff_t>(pos));
  out.cards.erase(out.cards.begin() + static_cast<std::ptrdiff_t>(pos));
  out.values.assign(outer * inner, 0.0);
  for (std::size_t o = 0; o < outer; ++o) {
    for (std::size_t s = 0; s < card; ++s) {
      const double* src = &f.values[(o * card + s) * inner];
      double* dst = &out.values[o * inner];
      for (std::size_t in = 0; in < inner; ++in) dst[in] += src[in];
    }
  }
  return out;
}

Factor cpt_factor(const Network& net, std::size_t node) {
  const auto& parents = net.parents(node);
  const auto& table = net.table(node);
  Factor f;
  f.vars = parents;
  f.vars.push_back(node);
  std::sort(f.vars.begin(), f.vars.end());
  for (auto v : f.vars) f.cards.push_back(net.variable(v).cardinality());
  std::size_t total = 1;
  for (auto c : f.cards) total *= c;
  f.values.resize(total);

  // Position of each table coordinate (parents..., node) in the factor.
  std::vector<std::size_t> table_vars = parents;
  table_vars.push_back(node);
  const auto strides = strides_of(f);
  std::vector<std::size_t> stride_for(table_vars.size());
  for (std::size_t k = 0; k < table_vars.size(); ++k) {
    const auto pos = static_cast<std::size_t>(
        std::lower_bound(f.vars.begin(), f.vars.end(), table_vars[k]) - f.vars.begin());
    stride_for[k] = strides[pos];
  }
  const std::size_t states = table.states();
  for (std::size_t row = 0; row < table.rows(); ++row) {
    const auto ps = table.parent_states(row);
    std::size_t base = 0;
    for (std::size_t k = 0; k < ps.size(); ++k) base += ps[k] * stride_for[k];
    const double total_row = table.row_total(row);
    const auto counts = table.row_counts(row);
    for (std::size_t s = 0; s < states; ++s) {
      f.values[base + s * stride_for.back()] = counts[s] / total_row;
    }
  }
  return f;
}

EvidenceSet EvidenceSet::from_labels(const Network& network,
                                     const std::map<std::string, std::vector<std::string>>& labels) {
  EvidenceSet ev;
  for (const auto& [name, states] : labels) {
    const auto node = network.require(name);
    std::vector<std::size_t> idx;
    for (const auto& s : states) {
      auto k = network.variable(node).state_index(s);
      if (!k) throw EvidenceError("node '" + name + "' has no state '" + s + "'");
      idx.push_back(*k);
    }
    ev.set(network, node, idx);
  }
  return ev;
}

void EvidenceSet::set(const Network& network, std::size_t node, std::span<const std::size_t> states) {
  if (node >= network.size()) throw EvidenceError("evidence node index out of range");
  if (states.empty()) {
    throw EvidenceError("evidence on '" + network.name(node) + "' admits no state");
  }
  std::vector<bool> mask(network.variable(node).cardinality(), false);
  for (auto s : states) {
    if (s >= mask.size()) throw EvidenceError("evidence state out of range for '" + network.name(node) + "'");
    mask[s] = true;
  }
  admissible[node] = std::move(mask);
}

std::vector<std::size_t> min_fill_order(const Network& network, std::span<const Factor> factors,
                                        std::span<const std::size_t> eliminate) {
  std::map<std::size_t, std::set<std::size_t>> adj;
  for (const auto& f : factors) {
    for (auto u : f.vars) {
      adj[u];
      for (auto v : f.vars) {
        if (u != v) adj[u].insert(v);
      }
    }
  }
  std::set<std::size_t> remaining(eliminate.begin(), eliminate.end());
  std::vector<std::size_t> order;
  while (!remaining.empty()) {
    std::size_t best = *remaining.begin();
    std::size_t best_fill = std::numeric_limits<std::size_t>::max();
    for (auto v : remaining) {
      const auto& nb = adj[v];
      std::size_t fill = 0;
      for (auto a = nb.begin(); a != nb.end(); ++a) {
        for (auto b = std::next(a); b != nb.end(); ++b) {
          if (!adj[*a].count(*b)) ++fill;
        }
      }
      if (fill < best_fill || (fill == best_fill && network.name(v) < network.name(best))) {
        best = v;
        best_fill = fill;
      }
    }
    const auto nb = adj[best];
    for (auto a : nb) {
      for (auto b : nb) {
        if (a != b) adj[a].insert(b);
      }
      adj[a].erase(best);
    }
    adj.erase(best);
    remaining.erase(best);
    order.push_back(best);
  }
  return order;
}

double evidence_probability(const Network& network, const EvidenceSet& evidence) {
  if (evidence.empty()) return 1.0;
  std::set<std::size_t> seeds;
  for (const auto& [node, mask] : evidence.admissible) seeds.insert(node);
  const auto nodes = ancestral_closure(network, seeds);
  auto factors = model_factors(network, nodes, evidence);
  const auto order = min_fill_order(network, factors, nodes);
  return eliminate(std::move(factors), order).sum();
}

PosteriorSet posterior(const Network& network, const EvidenceSet& evidence,
                       std::span<const std::size_t> query) {
  PosteriorSet out;
  std::set<std::size_t> evidence_nodes;
  for (const auto& [node, mask] : evidence.admissible) evidence_nodes.insert(node);

  if (query.empty()) {
    const double z = evidence_probability(network, evidence);
    if (!(z > 0.0)) throw InconsistentEvidence("evidence has zero probability");
    out.evidence_logprob = std::log(z);
    return out;
  }
  for (auto q : query) {
    if (q >= network.size()) throw EvidenceError("query node index out of range");
    auto seeds = evidence_nodes;
    seeds.insert(q);
    const auto nodes = ancestral_closure(network, seeds);
    auto factors = model_factors(network, nodes, evidence);
    std::vector<std::size_t> elim;
    for (auto v : nodes) {
      if (v != q) elim.push_back(v);
    }
    const auto order = min_fill_order(network, factors, elim);
    const Factor marginal = eliminate(std::move(factors), order);
    const double z = marginal.sum();
    if (!(z > 0.0)) throw InconsistentEvidence("evidence has zero probability");
    std::vector<double> p = marginal.values;
    for (double& x : p) x /= z;
    out.evidence_logprob = std::log(z);
    const auto& var = network.variable(q);
    if (var.is_binned()) out.expected[var.name] = expected_value(p, *var.bins);
    out.posteriors[var.name] = std::move(p);
  }
  return out;
}

double expected_value(std::span<const double> p, const BinScheme& scheme) {
  if (p.size() != scheme.size()) {
    throw std::invalid_argument("probability vector has " + std::to_string(p.size()) +
                                " entries for a " + std::to_string(scheme.size()) + "-bin scheme");
  }
  double e = 0.0;
  for (std::size_t k = 0; k < p.size(); ++k) e += p[k] * scheme.midpoint(k);
  return e;
}

std::size_t map_state(std::span<const double> p) {
  if (p.empty()) throw std::invalid_argument("map_state of an empty vector");
  std::size_t best = 0;
  for (std::size_t k = 1; k < p.size(); ++k) {
    if (p[k] > p[best]) best = k;
  }
  return best;
}

std::size_t Rng::categorical(std::span<const double> weights) {
  const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
  const double u = uniform() * total;
  double cum = 0.0;
  std::size_t last_positive = 0;
  for (std::size_t k = 0; k < weights.size(); ++k) {
    if (weights[k] <= 0.0) continue;
    cum += weights[k];
    last_positive = k;
    if (u < cum) return k;
  }
  return last_positive;
}

std::vector<Assignment> forward_sample(const Network& network, std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<Assignment> out;
  out.reserve(n);
  const auto& order = network.topological_order();
  for (std::size_t s = 0; s < n; ++s) {
    Assignment a(network.size(), kMissing);
    for (auto i : order) {
      const auto& t = network.table(i);
      a[i] = static_cast<int>(rng.categorical(t.row_counts(network.row_of(i, a))));
    }
    out.push_back(std::move(a));
  }
  return out;
}

double log_likelihood(const Network& network, const Assignment& a, double floor) {
  if (a.size() != network.size()) throw std::invalid_argument("assignment size mismatch");
  double ll = 0.0;
  for (std::size_t i = 0; i < network.size(); ++i) {
    if (a[i] < 0) throw IncompleteCase(0, network.name(i));
    const double p = std::max(network.conditional(i, a), floor);
    if (p <= 0.0) return -std::numeric_limits<double>::infinity();
    ll += std::log(p);
  }
  return ll;
}

std::vector<double> markov_blanket_distribution(const Network& network, const Assignment& a,
                                                std::size_t node) {
  for (auto m : network.markov_blanket(node)) {
    if (a.at(m) < 0) throw IncompleteCase(0, network.name(m));
  }
  const auto k = network.variable(node).cardinality();
  Assignment work = a;
  std::vector<double> p(k);
  double total = 0.0;
  for (std::size_t x = 0; x < k; ++x) {
    work[node] = static_cast<int>(x);
    double v = network.conditional(node, work);
    for (auto c : network.children(node)) v *= network.conditional(c, work);
    p[x] = v;
    total += v;
  }
  if (!(total > 0.0)) {
    throw InconsistentEvidence("Markov blanket of '" + network.name(node) + "' has zero probability");
  }
  for (double& x : p) x /= total;
  return p;
}

double markov_blanket_mean(const Network& network, const Assignment& a, std::size_t node) {
  const auto& var = network.variable(node);
  if (!var.is_binned()) throw std::invalid_argument("'" + var.name + "' is not a binned node");
  return expected_value(markov_blanket_distribution(network, a, node), *var.bins);
}

}  // namespace delayprop
