#include "delayprop/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "delayprop/cases.hpp"
#include "delayprop/csv.hpp"
#include "delayprop/errors.hpp"

namespace delayprop {

namespace {

std::string fmt(double v, const char* spec = "%.6g") {
  char buf[48];
  std::snprintf(buf, sizeof(buf), spec, v);
  return buf;
}

// Per-node approx MSE keyed by node name.
std::map<std::string, double> node_mse(const Network& net, std::span<const Assignment> cases) {
  std::map<std::string, double> out;
  if (cases.empty()) return out;
  for (const auto& e : evaluate_predictions(net, cases)) out[e.node] = e.approx_mse;
  return out;
}

const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                          "#ff7f0e", "#8c564b", "#e377c2", "#17becf"};

}  // namespace

CaseSplit split_by_date(std::span<const Assignment> cases, std::span<const EpochSeconds> timestamps,
                        EpochSeconds cutoff) {
  if (cases.size() != timestamps.size()) {
    throw std::invalid_argument("split_by_date: cases and timestamps differ in length");
  }
  CaseSplit split;
  for (std::size_t i = 0; i < cases.size(); ++i) {
    (timestamps[i] < cutoff ? split.train : split.test).push_back(cases[i]);
  }
  if (split.train.empty()) split.warnings.push_back("training split is empty");
  if (split.test.empty()) split.warnings.push_back("test split is empty");
  return split;
}

std::size_t ConfusionMatrix::total() const {
  return std::accumulate(counts_.begin(), counts_.end(), std::size_t{0});
}

double ConfusionMatrix::accuracy() const {
  const auto t = total();
  if (t == 0) return 0.0;
  std::size_t diag = 0;
  for (std::size_t k = 0; k < n_; ++k) diag += count(k, k);
  return static_cast<double>(diag) / static_cast<double>(t);
}

double approx_mse(std::span<const std::size_t> actual, std::span<const std::size_t> predicted,
                  const BinScheme& scheme) {
  if (actual.size() != predicted.size()) {
    throw std::invalid_argument("approx_mse: sequences differ in length");
  }
  if (actual.empty()) throw std::invalid_argument("approx_mse: no cases");
  double sse = 0.0;
  for (std::size_t i = 0; i < actual.size(); ++i) {
    const double d = scheme.midpoint(actual[i]) - scheme.midpoint(predicted[i]);
    sse += d * d;
  }
  return sse / static_cast<double>(actual.size());
}

std::map<double, double> scaled_mse(const std::map<double, double>& mse_by_weight) {
  if (mse_by_weight.size() < 2) throw std::invalid_argument("scaled_mse needs at least two values");
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (const auto& [w, m] : mse_by_weight) {
    lo = std::min(lo, m);
    hi = std::max(hi, m);
  }
  if (!(hi > lo)) throw std::invalid_argument("scaled_mse: all MSE values are equal");
  std::map<double, double> out;
  for (const auto& [w, m] : mse_by_weight) out[w] = (m - lo) / (hi - lo);
  return out;
}

std::vector<NodeEvaluation> evaluate_predictions(const Network& network,
                                                 std::span<const Assignment> cases) {
  std::vector<NodeEvaluation> out;
  for (std::size_t i = 0; i < network.size(); ++i) {
    const auto& var = network.variable(i);
    if (!var.is_binned()) continue;
    NodeEvaluation e{var.name, ConfusionMatrix(var.cardinality())};
    std::vector<std::size_t> actual;
    std::vector<std::size_t> predicted;
    for (const auto& a : cases) {
      try {
        const auto p = markov_blanket_distribution(network, a, i);
        actual.push_back(static_cast<std::size_t>(a[i]));
        predicted.push_back(map_state(p));
        e.confusion.add(actual.back(), predicted.back());
      } catch (const InconsistentEvidence&) {
        ++e.skipped;
      }
    }
    e.cases = actual.size();
    if (!actual.empty()) {
      e.approx_mse = approx_mse(actual, predicted, *var.bins);
      double sum = 0.0;
      double sq = 0.0;
      for (auto k : actual) {
        const double m = var.bins->midpoint(k);
        sum += m;
        sq += m * m;
      }
      const double n = static_cast<double>(actual.size());
      e.mean = sum / n;
      e.std = std::sqrt(std::max(sq / n - e.mean * e.mean, 0.0));
    }
    out.push_back(std::move(e));
  }
  return out;
}

SweepResult weight_sweep(const NetworkSpec& spec, std::span<const Assignment> train,
                         std::span<const Assignment> test, std::span<const double> weights,
                         double counts_only_weight) {
  if (weights.empty()) throw std::invalid_argument("weight_sweep needs at least one weight");
  for (double w : weights) {
    if (!(w > 0.0)) throw std::invalid_argument("sweep weights must be positive");
  }
  SweepResult r;
  r.weights.assign(weights.begin(), weights.end());
  const Network prior = build_network(spec);
  for (std::size_t i = 0; i < prior.size(); ++i) {
    if (prior.variable(i).is_binned()) r.nodes.push_back(prior.name(i));
  }
  for (double w : r.weights) {
    const Network net = delayprop::train(prior, train, w);
    const auto tr = node_mse(net, train);
    const auto te = node_mse(net, test);
    for (const auto& n : r.nodes) {
      r.train_mse[n].push_back(tr.count(n) ? tr.at(n) : std::nan(""));
      r.test_mse[n].push_back(te.count(n) ? te.at(n) : std::nan(""));
    }
  }
  r.regression_only_train = node_mse(prior, train);
  r.regression_only_test = node_mse(prior, test);

  NetworkSpec counts_spec = spec;
  for (auto& node : counts_spec.nodes) node.prior = PriorSource::uniform();
  r.counts_only_weight = counts_only_weight > 0.0 ? counts_only_weight : spec.case_weight;
  const Network counts_net =
      delayprop::train(build_network(counts_spec), train, r.counts_only_weight);
  r.counts_only_train = node_mse(counts_net, train);
  r.counts_only_test = node_mse(counts_net, test);
  return r;
}

std::map<std::string, BlanketError> blanket_sq_error(const Network& network,
                                                     std::span<const Assignment> cases) {
  std::map<std::string, BlanketError> out;
  for (std::size_t i = 0; i < network.size(); ++i) {
    const auto& var = network.variable(i);
    if (!var.is_binned()) continue;
    BlanketError be;
    double sse = 0.0;
    for (const auto& a : cases) {
      try {
        const double mean = markov_blanket_mean(network, a, i);
        const double d = var.bins->midpoint(static_cast<std::size_t>(a[i])) - mean;
        sse += d * d;
        ++be.cases;
      } catch (const InconsistentEvidence&) {
        ++be.skipped;
      }
    }
    be.mse = be.cases ? sse / static_cast<double>(be.cases) : 0.0;
    out[var.name] = be;
  }
  return out;
}

double ks_statistic(std::vector<double> a, std::vector<double> b) {
  if (a.empty() || b.empty()) throw std::invalid_argument("ks_statistic needs two nonempty samples");
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  std::size_t i = 0;
  std::size_t j = 0;
  double d = 0.0;
  while (i < a.size() && j < b.size()) {
    const double x = std::min(a[i], b[j]);
    while (i < a.size() && a[i] == x) ++i;
    while (j < b.size() && b[j] == x) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
  }
  return d;
}

LikelihoodComparison ll_comparison(const Network& network, std::span<const Assignment> holdout,
                                   std::size_t n_generated, std::uint64_t seed, double floor) {
  if (holdout.empty()) throw std::invalid_argument("ll_comparison needs a nonempty holdout");
  LikelihoodComparison out;
  for (const auto& a : holdout) {
    const double ll = log_likelihood(network, a, floor);
    if (std::isfinite(ll)) {
      out.holdout.push_back(ll);
    } else {
      ++out.holdout_neg_inf;
    }
  }
  for (const auto& a : forward_sample(network, n_generated, seed)) {
    const double ll = log_likelihood(network, a, floor);
    if (std::isfinite(ll)) {
      out.generated.push_back(ll);
    } else {
      ++out.generated_neg_inf;
    }
  }
  if (!out.holdout.empty() && !out.generated.empty()) {
    out.ks = ks_statistic(out.holdout, out.generated);
  } else {
    out.ks = 1.0;
  }
  return out;
}

void write_confusion_csv(std::ostream& out, const Network& network,
                         const std::vector<NodeEvaluation>& evals) {
  csv::write_row(out, {"node", "actual", "predicted", "count"});
  for (const auto& e : evals) {
    const auto& var = network.variable(network.require(e.node));
    for (std::size_t a = 0; a < e.confusion.states(); ++a) {
      for (std::size_t p = 0; p < e.confusion.states(); ++p) {
        csv::write_row(out, {e.node, var.states[a], var.states[p],
                             std::to_string(e.confusion.count(a, p))});
      }
    }
  }
}

void write_sweep_csv(std::ostream& out, const SweepResult& sweep) {
  csv::write_row(out, {"node", "weight", "train_mse", "test_mse", "train_scaled", "test_scaled"});
  for (const auto& n : sweep.nodes) {
    std::map<double, double> tr;
    std::map<double, double> te;
    for (std::size_t k = 0; k < sweep.weights.size(); ++k) {
      tr[sweep.weights[k]] = sweep.train_mse.at(n)[k];
      te[sweep.weights[k]] = sweep.test_mse.at(n)[k];
    }
    auto scaled = [](const std::map<double, double>& m) {
      try {
        return scaled_mse(m);
      } catch (const std::invalid_argument&) {
        return std::map<double, double>{};
      }
    };
    const auto str = scaled(tr);
    const auto ste = scaled(te);
    for (std::size_t k = 0; k < sweep.weights.size(); ++k) {
      const double w = sweep.weights[k];
      csv::write_row(out, {n, format_number(w), fmt(tr[w], "%.10g"), fmt(te[w], "%.10g"),
                           str.count(w) ? fmt(str.at(w), "%.10g") : "",
                           ste.count(w) ? fmt(ste.at(w), "%.10g") : ""});
    }
  }
}

void write_sweep_svg(std::ostream& out, const SweepResult& sweep, bool test_sample) {
  const double W = 640, H = 400, L = 60, R = 160, T = 30, B = 50;
  const auto& data = test_sample ? sweep.test_mse : sweep.train_mse;
  double xmin = std::log10(*std::min_element(sweep.weights.begin(), sweep.weights.end()));
  double xmax = std::log10(*std::max_element(sweep.weights.begin(), sweep.weights.end()));
  if (xmax <= xmin) xmax = xmin + 1.0;
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\">\n";
  out << "<text x=\"" << L << "\" y=\"20\" font-size=\"14\">Scaled MSE vs case weight ("
      << (test_sample ? "test" : "training") << " sample)</text>\n";
  out << "<rect x=\"" << L << "\" y=\"" << T << "\" width=\"" << W - L - R << "\" height=\""
      << H - T - B << "\" fill=\"none\" stroke=\"#444\"/>\n";
  for (double w : sweep.weights) {
    const double x = L + (std::log10(w) - xmin) / (xmax - xmin) * (W - L - R);
    out << "<text x=\"" << x << "\" y=\"" << H - B + 18 << "\" font-size=\"11\" text-anchor=\"middle\">"
        << format_number(w) << "</text>\n";
  }
  std::size_t color = 0;
  for (const auto& n : sweep.nodes) {
    std::map<double, double> m;
    for (std::size_t k = 0; k < sweep.weights.size(); ++k) m[sweep.weights[k]] = data.at(n)[k];
    std::map<double, double> s;
    try {
      s = scaled_mse(m);
    } catch (const std::invalid_argument&) {
      for (const auto& [w, v] : m) s[w] = 0.0;
    }
    const char* c = kPalette[color++ % std::size(kPalette)];
    out << "<polyline fill=\"none\" stroke=\"" << c << "\" stroke-width=\"2\" points=\"";
    for (const auto& [w, v] : s) {
      const double x = L + (std::log10(w) - xmin) / (xmax - xmin) * (W - L - R);
      const double y = T + (1.0 - v) * (H - T - B);
      out << x << ',' << y << ' ';
    }
    out << "\"/>\n";
    const double ly = T + 16.0 * static_cast<double>(color);
    out << "<text x=\"" << W - R + 10 << "\" y=\"" << ly << "\" font-size=\"11\" fill=\"" << c
        << "\">" << n << "</text>\n";
  }
  out << "</svg>\n";
}

void write_ll_histogram_svg(std::ostream& out, const LikelihoodComparison& ll) {
  const double W = 640, H = 400, L = 50, R = 20, T = 30, B = 40;
  const int bins = 30;
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (const auto* v : {&ll.holdout, &ll.generated}) {
    for (double x : *v) {
      lo = std::min(lo, x);
      hi = std::max(hi, x);
    }
  }
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\">\n";
  out << "<text x=\"" << L << "\" y=\"20\" font-size=\"14\">Log-likelihood: holdout (blue) vs generated (red), KS="
      << fmt(ll.ks, "%.4f") << "</text>\n";
  if (std::isfinite(lo) && hi > lo) {
    auto density = [&](const std::vector<double>& v) {
      std::vector<double> h(bins, 0.0);
      for (double x : v) {
        auto k = static_cast<int>((x - lo) / (hi - lo) * bins);
        h[static_cast<std::size_t>(std::clamp(k, 0, bins - 1))] += 1.0 / static_cast<double>(v.size());
      }
      return h;
    };
    const auto a = ll.holdout.empty() ? std::vector<double>(bins, 0.0) : density(ll.holdout);
    const auto b = ll.generated.empty() ? std::vector<double>(bins, 0.0) : density(ll.generated);
    const double top = std::max(*std::max_element(a.begin(), a.end()), *std::max_element(b.begin(), b.end()));
    const double bw = (W - L - R) / bins;
    for (int k = 0; k < bins; ++k) {
      const auto ku = static_cast<std::size_t>(k);
      const double ha = top > 0 ? a[ku] / top * (H - T - B) : 0;
      const double hb = top > 0 ? b[ku] / top * (H - T - B) : 0;
      out << "<rect x=\"" << L + k * bw << "\" y=\"" << H - B - ha << "\" width=\"" << bw / 2
          << "\" height=\"" << ha << "\" fill=\"#1f77b4\"/>\n";
      out << "<rect x=\"" << L + k * bw + bw / 2 << "\" y=\"" << H - B - hb << "\" width=\"" << bw / 2
          << "\" height=\"" << hb << "\" fill=\"#d62728\"/>\n";
    }
    out << "<text x=\"" << L << "\" y=\"" << H - 10 << "\" font-size=\"11\">" << fmt(lo, "%.2f") << "</text>\n";
    out << "<text x=\"" << W - R << "\" y=\"" << H - 10 << "\" font-size=\"11\" text-anchor=\"end\">"
        << fmt(hi, "%.2f") << "</text>\n";
  }
  out << "</svg>\n";
}

}  // namespace delayprop
