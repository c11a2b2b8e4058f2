#include "delayprop/discretizer.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <map>
#include <stdexcept>

namespace delayprop {

namespace {

double modal_width(const std::vector<double>& edges) {
  // Widths are compared after rounding to a microminute so that 15.000000001
  // and 15 count as the same width.
  std::map<long long, int> counts;
  for (std::size_t i = 1; i < edges.size(); ++i) {
    counts[std::llround((edges[i] - edges[i - 1]) * 1e6)]++;
  }
  long long best = 0;
  int best_count = -1;
  for (const auto& [w, c] : counts) {
    if (c > best_count) {
      best = w;
      best_count = c;
    }
  }
  return static_cast<double>(best) * 1e-6;
}

}  // namespace

std::string format_edge(double x) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, res.ptr);
}

BinScheme::BinScheme(std::vector<double> edges, bool lower_open, bool upper_open,
                     double tail_halfwidth)
    : edges_(std::move(edges)), lower_open_(lower_open), upper_open_(upper_open),
      tail_halfwidth_(tail_halfwidth) {
  if (edges_.empty()) throw std::invalid_argument("bin scheme needs at least one edge");
  for (double e : edges_) {
    if (!std::isfinite(e)) throw std::invalid_argument("bin edges must be finite");
  }
  for (std::size_t i = 1; i < edges_.size(); ++i) {
    if (!(edges_[i] > edges_[i - 1])) {
      throw std::invalid_argument("bin edges must be strictly increasing");
    }
  }
  num_bins_ = edges_.size() - 1 + (lower_open_ ? 1 : 0) + (upper_open_ ? 1 : 0);
  if (num_bins_ < 2) throw std::invalid_argument("bin scheme needs at least 2 bins");
  if (tail_halfwidth_ <= 0.0) {
    if (edges_.size() < 2) {
      throw std::invalid_argument("tail_halfwidth required when there are no interior bins");
    }
    tail_halfwidth_ = 0.5 * modal_width(edges_);
  }
}

BinScheme BinScheme::uniform(double lo, double hi, double width, bool lower_open,
                             bool upper_open, double tail_halfwidth) {
  if (!(width > 0.0) || !(hi > lo)) throw std::invalid_argument("uniform scheme needs lo < hi, width > 0");
  const double steps = (hi - lo) / width;
  const auto n = static_cast<long long>(std::llround(steps));
  if (std::abs(steps - static_cast<double>(n)) > 1e-9) {
    throw std::invalid_argument("uniform scheme width must divide hi - lo");
  }
  std::vector<double> edges;
  edges.reserve(static_cast<std::size_t>(n) + 1);
  for (long long i = 0; i <= n; ++i) edges.push_back(lo + static_cast<double>(i) * width);
  return BinScheme(std::move(edges), lower_open, upper_open, tail_halfwidth);
}

void BinScheme::check_index(std::size_t k) const {
  if (k >= num_bins_) {
    throw std::out_of_range("bin index " + std::to_string(k) + " out of range (" +
                            std::to_string(num_bins_) + " bins)");
  }
}

std::size_t BinScheme::bin_index(double x) const {
  if (!std::isfinite(x)) throw std::invalid_argument("cannot bin a non-finite value");
  const std::size_t offset = lower_open_ ? 1 : 0;
  if (x < edges_.front()) {
    if (lower_open_) return 0;
    throw std::out_of_range("value " + format_edge(x) + " below lowest edge");
  }
  if (x >= edges_.back()) {
    if (upper_open_) return num_bins_ - 1;
    throw std::out_of_range("value " + format_edge(x) + " above highest edge");
  }
  const auto it = std::upper_bound(edges_.begin(), edges_.end(), x);
  return offset + static_cast<std::size_t>(it - edges_.begin()) - 1;
}

double BinScheme::lower(std::size_t k) const {
  check_index(k);
  if (is_lower_tail(k)) return -std::numeric_limits<double>::infinity();
  return edges_[k - (lower_open_ ? 1 : 0)];
}

double BinScheme::upper(std::size_t k) const {
  check_index(k);
  if (is_upper_tail(k)) return std::numeric_limits<double>::infinity();
  return edges_[k - (lower_open_ ? 1 : 0) + 1];
}

double BinScheme::midpoint(std::size_t k) const {
  check_index(k);
  if (is_lower_tail(k)) return edges_.front() - tail_halfwidth_;
  if (is_upper_tail(k)) return edges_.back() + tail_halfwidth_;
  return 0.5 * (lower(k) + upper(k));
}

std::vector<double> BinScheme::midpoints() const {
  std::vector<double> out(num_bins_);
  for (std::size_t k = 0; k < num_bins_; ++k) out[k] = midpoint(k);
  return out;
}

std::string BinScheme::label(std::size_t k) const {
  check_index(k);
  if (is_lower_tail(k)) return "(-inf," + format_edge(edges_.front()) + ")";
  if (is_upper_tail(k)) return "[" + format_edge(edges_.back()) + ",inf)";
  return "[" + format_edge(lower(k)) + "," + format_edge(upper(k)) + ")";
}

std::vector<std::string> BinScheme::labels() const {
  std::vector<std::string> out(num_bins_);
  for (std::size_t k = 0; k < num_bins_; ++k) out[k] = label(k);
  return out;
}

std::optional<std::size_t> BinScheme::index_of_label(const std::string& text) const {
  for (std::size_t k = 0; k < num_bins_; ++k) {
    if (label(k) == text) return k;
  }
  return std::nullopt;
}

std::vector<double> empirical_density(std::span<const double> values, const BinScheme& scheme) {
  if (values.empty()) throw std::invalid_argument("empirical_density of empty sample");
  std::vector<double> counts(scheme.size(), 0.0);
  for (double v : values) counts[scheme.bin_index(v)] += 1.0;
  const double n = static_cast<double>(values.size());
  for (double& c : counts) c /= n;
  return counts;
}

}  // namespace delayprop
