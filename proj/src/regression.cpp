#include "delayprop/regression.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <set>
#include <stdexcept>

#include "delayprop/errors.hpp"

namespace delayprop {

namespace {

struct Candidate {
  std::string name;
  bool categorical = false;
  std::vector<double> x;               // continuous values
  std::vector<std::string> labels;     // categorical values
  std::vector<std::string> levels;     // sorted distinct labels; levels[0] is the baseline
  std::vector<double> grid;            // hinge breakpoints
};

// A term choice during selection, before coefficients are known.
struct TermShape {
  std::size_t candidate;
  RegressionTerm::Kind kind;
  double breakpoint = 0.0;
};

std::size_t num_columns(const TermShape& t, const std::vector<Candidate>& cands) {
  switch (t.kind) {
    case RegressionTerm::Kind::linear: return 1;
    case RegressionTerm::Kind::hinge: return 2;
    case RegressionTerm::Kind::categorical: return cands[t.candidate].levels.size() - 1;
  }
  return 0;
}

Eigen::MatrixXd design(const std::vector<TermShape>& shape, const std::vector<Candidate>& cands,
                       const std::vector<std::size_t>& rows) {
  std::size_t cols = 1;
  for (const auto& t : shape) cols += num_columns(t, cands);
  Eigen::MatrixXd X(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(cols));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const auto i = rows[r];
    const auto rr = static_cast<Eigen::Index>(r);
    Eigen::Index c = 0;
    X(rr, c++) = 1.0;
    for (const auto& t : shape) {
      const auto& cand = cands[t.candidate];
      switch (t.kind) {
        case RegressionTerm::Kind::linear:
          X(rr, c++) = cand.x[i];
          break;
        case RegressionTerm::Kind::hinge:
          X(rr, c++) = cand.x[i];
          X(rr, c++) = std::max(cand.x[i] - t.breakpoint, 0.0);
          break;
        case RegressionTerm::Kind::categorical:
          for (std::size_t l = 1; l < cand.levels.size(); ++l) {
            X(rr, c++) = cand.labels[i] == cand.levels[l] ? 1.0 : 0.0;
          }
          break;
      }
    }
  }
  return X;
}

Eigen::VectorXd solve(const Eigen::MatrixXd& X, const Eigen::VectorXd& y) {
  // Minimum-norm least squares; tolerates indicator columns that are all zero
  // inside a cross-validation fold.
  Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(X);
  return cod.solve(y);
}

Eigen::VectorXd gather(const std::vector<double>& y, const std::vector<std::size_t>& rows) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t r = 0; r < rows.size(); ++r) out(static_cast<Eigen::Index>(r)) = y[rows[r]];
  return out;
}

class Selector {
 public:
  Selector(std::vector<Candidate> cands, std::vector<double> y, std::vector<std::size_t> fold,
           std::size_t folds)
      : cands_(std::move(cands)), y_(std::move(y)), fold_(std::move(fold)), folds_(folds) {
    for (std::size_t f = 0; f < folds_; ++f) {
      std::vector<std::size_t> train;
      std::vector<std::size_t> test;
      for (std::size_t i = 0; i < y_.size(); ++i) (fold_[i] == f ? test : train).push_back(i);
      if (!test.empty() && !train.empty()) splits_.emplace_back(std::move(train), std::move(test));
    }
    if (splits_.empty()) throw DataError("cross-validation produced no usable folds");
  }

  // Held-out squared error per case, in split order.
  std::vector<double> cv_errors(const std::vector<TermShape>& shape) const {
    std::vector<double> out;
    out.reserve(y_.size());
    for (const auto& [train, test] : splits_) {
      const auto beta = solve(design(shape, cands_, train), gather(y_, train));
      const Eigen::VectorXd resid = gather(y_, test) - design(shape, cands_, test) * beta;
      for (Eigen::Index i = 0; i < resid.size(); ++i) out.push_back(resid(i) * resid(i));
    }
    return out;
  }

  double cv_mse(const std::vector<TermShape>& shape) const { return mean(cv_errors(shape)); }

  static double mean(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
  }

  const std::vector<Candidate>& candidates() const { return cands_; }
  const std::vector<double>& response() const { return y_; }

 private:
  std::vector<Candidate> cands_;
  std::vector<double> y_;
  std::vector<std::size_t> fold_;
  std::size_t folds_;
  std::vector<std::pair<std::vector<std::size_t>, std::vector<std::size_t>>> splits_;
};

std::uint64_t fnv1a(std::uint64_t h, const std::string& s) {
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  h ^= 0x1f;  // field separator
  h *= 1099511628211ULL;
  return h;
}

std::vector<double> decile_grid(std::vector<double> x) {
  std::sort(x.begin(), x.end());
  std::vector<double> grid;
  for (int d = 1; d <= 9; ++d) {
    const auto pos = static_cast<std::size_t>(std::ceil(d / 10.0 * static_cast<double>(x.size()))) - 1;
    const double v = x[std::min(pos, x.size() - 1)];
    if (v > x.front() && v < x.back() && (grid.empty() || v > grid.back())) grid.push_back(v);
  }
  return grid;
}

}  // namespace

std::vector<std::string> PiecewiseRegression::predictors() const {
  std::vector<std::string> out;
  out.reserve(terms.size());
  for (const auto& t : terms) out.push_back(t.predictor);
  return out;
}

PiecewiseRegression fit_piecewise(const CaseTable& data, const std::string& response,
                                  const std::vector<std::string>& candidates,
                                  const FitOptions& options) {
  if (options.folds < 2) throw std::invalid_argument("cross-validation needs at least 2 folds");
  const auto ycol = data.column_index(response);
  if (!ycol) throw DataError("no column '" + response + "' in case table");
  std::vector<std::size_t> ccols;
  for (const auto& c : candidates) {
    const auto col = data.column_index(c);
    if (!col) throw DataError("no column '" + c + "' in case table");
    ccols.push_back(*col);
  }

  // Complete cases only.
  std::vector<std::size_t> rows;
  for (std::size_t r = 0; r < data.size(); ++r) {
    if (!data.number(r, *ycol)) continue;
    bool complete = true;
    for (auto col : ccols) complete = complete && !data.rows[r][col].empty();
    if (complete) rows.push_back(r);
  }
  const std::size_t needed = std::max<std::size_t>(options.cases_per_candidate * candidates.size(), 2);
  if (rows.size() < needed) {
    throw DataError("fit of '" + response + "' needs " + std::to_string(needed) +
                    " complete cases, found " + std::to_string(rows.size()));
  }

  std::vector<double> y;
  y.reserve(rows.size());
  for (auto r : rows) y.push_back(*data.number(r, *ycol));

  std::vector<Candidate> cands;
  for (std::size_t k = 0; k < candidates.size(); ++k) {
    Candidate cand;
    cand.name = candidates[k];
    bool numeric = true;
    for (auto r : rows) numeric = numeric && data.number(r, ccols[k]).has_value();
    cand.categorical = !numeric;
    if (numeric) {
      for (auto r : rows) cand.x.push_back(*data.number(r, ccols[k]));
      cand.grid = decile_grid(cand.x);
    } else {
      std::set<std::string> levels;
      for (auto r : rows) {
        cand.labels.push_back(data.rows[r][ccols[k]]);
        levels.insert(cand.labels.back());
      }
      cand.levels.assign(levels.begin(), levels.end());
    }
    cands.push_back(std::move(cand));
  }

  std::vector<std::size_t> fold(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    std::uint64_t h = 14695981039346656037ULL;
    h = fnv1a(h, data.rows[rows[i]][*ycol]);
    for (auto col : ccols) h = fnv1a(h, data.rows[rows[i]][col]);
    fold[i] = static_cast<std::size_t>(h % options.folds);
  }

  Selector sel(std::move(cands), std::move(y), std::move(fold), options.folds);
  const auto& cs = sel.candidates();

  // Gains below rounding level of the response do not count (constant responses).
  double noise = 0.0;
  for (double v : sel.response()) noise += v * v;
  noise = 1e-12 * (1.0 + noise / static_cast<double>(sel.response().size()));

  std::vector<TermShape> shape;
  double current = sel.cv_mse(shape);
  std::vector<bool> used(cs.size(), false);
  while (true) {
    std::optional<TermShape> best;
    double best_cv = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < cs.size(); ++k) {
      if (used[k]) continue;
      if (cs[k].categorical && cs[k].levels.size() < 2) continue;
      TermShape choice{k, cs[k].categorical ? RegressionTerm::Kind::categorical
                                            : RegressionTerm::Kind::linear};
      auto trial = shape;
      trial.push_back(choice);
      const auto linear_err = sel.cv_errors(trial);
      double cv = Selector::mean(linear_err);
      if (!cs[k].categorical) {
        double hinge_cv = std::numeric_limits<double>::infinity();
        TermShape hinge_choice = choice;
        std::vector<double> hinge_err;
        for (double c : cs[k].grid) {
          trial.back() = TermShape{k, RegressionTerm::Kind::hinge, c};
          auto e = sel.cv_errors(trial);
          const double v = Selector::mean(e);
          if (v < hinge_cv) {
            hinge_cv = v;
            hinge_choice = trial.back();
            hinge_err = std::move(e);
          }
        }
        // The hinge replaces the linear form only when it gains the relative
        // margin and more than one standard error of the paired differences.
        if (!hinge_err.empty()) {
          const double n = static_cast<double>(hinge_err.size());
          double var = 0.0;
          const double gain = cv - hinge_cv;
          for (std::size_t i = 0; i < hinge_err.size(); ++i) {
            const double d = linear_err[i] - hinge_err[i] - gain;
            var += d * d;
          }
          const double se = std::sqrt(var / std::max(n - 1.0, 1.0) / n);
          if (gain > options.min_improvement * cv && gain > se) {
            cv = hinge_cv;
            choice = hinge_choice;
          }
        }
      }
      if (cv < best_cv) {
        best_cv = cv;
        best = choice;
      }
    }
    if (!best || !(best_cv < current) || current - best_cv < options.min_improvement * current ||
        current - best_cv <= noise) {
      break;
    }
    shape.push_back(*best);
    used[best->candidate] = true;
    current = best_cv;
  }

  // Refit on all complete cases.
  std::vector<std::size_t> all(sel.response().size());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
  const Eigen::MatrixXd X = design(shape, cs, all);
  const Eigen::VectorXd yy = gather(sel.response(), all);
  const Eigen::VectorXd beta = solve(X, yy);
  const double rss = (yy - X * beta).squaredNorm();
  Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(X);
  const auto params = static_cast<double>(cod.rank());
  const double n = static_cast<double>(all.size());
  const double dof = n > params ? n - params : n;

  PiecewiseRegression model;
  model.response = response;
  model.intercept = beta(0);
  model.sigma = std::max(std::sqrt(rss / dof), options.sigma_floor);
  model.cv_score = current;
  Eigen::Index c = 1;
  for (const auto& t : shape) {
    const auto& cand = cs[t.candidate];
    RegressionTerm term;
    term.predictor = cand.name;
    term.kind = t.kind;
    switch (t.kind) {
      case RegressionTerm::Kind::linear:
        term.slopes = {beta(c++)};
        break;
      case RegressionTerm::Kind::hinge: {
        const double below = beta(c++);
        const double delta = beta(c++);
        term.breakpoint = t.breakpoint;
        term.slopes = {below, below + delta};
        break;
      }
      case RegressionTerm::Kind::categorical:
        for (std::size_t l = 1; l < cand.levels.size(); ++l) term.levels[cand.levels[l]] = beta(c++);
        break;
    }
    model.terms.push_back(std::move(term));
  }
  return model;
}

double predict_mean(const PiecewiseRegression& model,
                    const std::map<std::string, PredictorValue>& values) {
  double mean = model.intercept;
  for (const auto& t : model.terms) {
    auto it = values.find(t.predictor);
    if (it == values.end()) {
      throw std::invalid_argument("missing value for predictor '" + t.predictor + "'");
    }
    if (t.kind == RegressionTerm::Kind::categorical) {
      const auto* label = std::get_if<std::string>(&it->second);
      if (!label) throw std::invalid_argument("predictor '" + t.predictor + "' is categorical");
      auto lv = t.levels.find(*label);
      if (lv != t.levels.end()) mean += lv->second;
      continue;
    }
    const auto* x = std::get_if<double>(&it->second);
    if (!x) throw std::invalid_argument("predictor '" + t.predictor + "' is continuous");
    if (t.kind == RegressionTerm::Kind::linear) {
      mean += t.slopes.at(0) * *x;
    } else {
      const double c = t.breakpoint.value();
      mean += t.slopes.at(0) * *x + (t.slopes.at(1) - t.slopes.at(0)) * std::max(*x - c, 0.0);
    }
  }
  return mean;
}

}  // namespace delayprop
