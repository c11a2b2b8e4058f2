#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "delayprop/cases.hpp"

namespace delayprop {

// One selected predictor of a piecewise regression.
//   linear:      slopes = {b}
//   hinge:       slopes = {below, above}, continuous at breakpoint
//   categorical: level -> offset; unlisted levels (the baseline) contribute 0
struct RegressionTerm {
  enum class Kind { linear, hinge, categorical };
  std::string predictor;
  Kind kind = Kind::linear;
  std::optional<double> breakpoint;
  std::vector<double> slopes;
  std::map<std::string, double> levels;

  friend bool operator==(const RegressionTerm&, const RegressionTerm&) = default;
};

struct PiecewiseRegression {
  std::string response;
  double intercept = 0.0;
  std::vector<RegressionTerm> terms;  // in selection order
  double sigma = 0.0;
  double cv_score = 0.0;  // k-fold cross-validated MSE of the selected model

  std::vector<std::string> predictors() const;

  friend bool operator==(const PiecewiseRegression&, const PiecewiseRegression&) = default;
};

using PredictorValue = std::variant<double, std::string>;

struct FitOptions {
  std::size_t folds = 5;
  double min_improvement = 0.01;  // relative CV-MSE gain required to keep a candidate
  double sigma_floor = 0.5;       // minutes
  std::size_t cases_per_candidate = 10;
};

// Forward selection over candidates in the given order. Each continuous
// candidate is tried as a linear term and as a single hinge at each interior
// decile; categorical candidates enter as indicators. Fold membership is a
// hash of each case's values, so case order does not affect the result.
// Throws DataError on too few complete cases or missing columns.
PiecewiseRegression fit_piecewise(const CaseTable& data, const std::string& response,
                                  const std::vector<std::string>& candidates,
                                  const FitOptions& options = {});

// Throws std::invalid_argument when a predictor is missing or has the wrong type.
double predict_mean(const PiecewiseRegression& model,
                    const std::map<std::string, PredictorValue>& values);

}  // namespace delayprop
