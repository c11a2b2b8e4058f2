#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace delayprop {

// Ordered bins over a real line (minutes). Interior bins are half-open
// [lo, hi); the optional tails are (-inf, first_edge) and [last_edge, inf).
// Bin indices run from the lower tail (if open) to the upper tail (if open).
class BinScheme {
 public:
  // tail_halfwidth <= 0 selects the default: half the most common interior width.
  BinScheme(std::vector<double> edges, bool lower_open, bool upper_open,
            double tail_halfwidth = 0.0);

  // Equal-width bins from lo to hi.
  static BinScheme uniform(double lo, double hi, double width, bool lower_open = true,
                           bool upper_open = true, double tail_halfwidth = 0.0);

  std::size_t size() const { return num_bins_; }
  const std::vector<double>& edges() const { return edges_; }
  bool lower_open() const { return lower_open_; }
  bool upper_open() const { return upper_open_; }
  double tail_halfwidth() const { return tail_halfwidth_; }

  // Throws std::out_of_range when x falls outside closed tails, and
  // std::invalid_argument for non-finite x.
  std::size_t bin_index(double x) const;

  double lower(std::size_t k) const;  // -inf for the lower tail
  double upper(std::size_t k) const;  // +inf for the upper tail
  double midpoint(std::size_t k) const;
  std::vector<double> midpoints() const;

  bool is_lower_tail(std::size_t k) const { return lower_open_ && k == 0; }
  bool is_upper_tail(std::size_t k) const { return upper_open_ && k + 1 == num_bins_; }

  // "[15,30)", "(-inf,-60)", "[120,inf)".
  std::string label(std::size_t k) const;
  std::vector<std::string> labels() const;
  std::optional<std::size_t> index_of_label(const std::string& label) const;

  friend bool operator==(const BinScheme&, const BinScheme&) = default;

 private:
  void check_index(std::size_t k) const;

  std::vector<double> edges_;
  bool lower_open_;
  bool upper_open_;
  double tail_halfwidth_;
  std::size_t num_bins_;
};

// Normalized histogram of values over the scheme's bins.
std::vector<double> empirical_density(std::span<const double> values, const BinScheme& scheme);

// Shortest round-trip decimal text for a bin edge ("15", "-7.5").
std::string format_edge(double x);

}  // namespace delayprop
