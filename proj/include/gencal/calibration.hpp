#pragma once

#include <Eigen/Dense>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "gencal/expfam.hpp"
#include "gencal/glm.hpp"

namespace gencal {

/// Observed validation outcomes paired with a model's predicted means.
struct PredictionSet {
  Eigen::VectorXd y_obs;
  Eigen::VectorXd mu_hat;
  FamilySpec family{FamilyKind::poisson};
  /// Link used to transform the predictions in the calibration models.
  LinkSpec link{LinkKind::log};
  /// Predictions nudged inward off the link boundary.
  std::size_t clamped_count = 0;

  Eigen::Index size() const noexcept { return y_obs.size(); }
};

inline constexpr double kBoundaryClamp = 1e-10;

/// Validates and builds a PredictionSet. The link defaults to the family's
/// canonical link. Predictions exactly on the link boundary (0 for log and
/// logit, 1 for logit) move inward by kBoundaryClamp and are counted; values
/// beyond the boundary or outcomes outside the support throw ValidationError
/// naming the row.
PredictionSet make_prediction_set(Eigen::VectorXd y_obs, Eigen::VectorXd mu_hat,
                                  const FamilySpec& family,
                                  std::optional<LinkSpec> link = std::nullopt,
                                  Eigen::Index min_size = 10);

/// g(E[y | mu_hat]) = alpha + zeta * g(mu_hat).
struct GlmCalibration {
  double alpha = 0.0;
  double zeta = 1.0;
  double alpha_se = 0.0;
  double zeta_se = 0.0;
  GlmFit fit;

  /// g^{-1}(alpha + zeta * g(m)) at each grid point.
  Eigen::VectorXd curve(const LinkSpec& link, const Eigen::Ref<const Eigen::VectorXd>& grid) const;
};

/// g(E[y | mu_hat]) = alpha_c + offset(g(mu_hat)).
struct InterceptCalibration {
  double alpha_c = 0.0;
  double se = 0.0;
  GlmFit fit;
};

struct FlexibleCurve {
  Eigen::VectorXd grid;
  Eigen::VectorXd fitted;
  Eigen::VectorXd se;
  Eigen::VectorXd lower;
  Eigen::VectorXd upper;
  double level = 0.95;
  double z = 0.0;
};

struct Bin {
  double mean_predicted = 0.0;
  double mean_observed = 0.0;
  std::size_t count = 0;
};

struct BinnedCurve {
  std::vector<Bin> bins;
  /// Requested bins left empty by tied predictions and dropped.
  std::size_t merged_bins = 0;
  std::vector<std::string> warnings;
};

struct Histogram {
  std::vector<double> edges;  ///< bins + 1 ascending edges
  std::vector<std::size_t> counts;
};

GlmCalibration calibration_glm(const PredictionSet& preds, const GlmControl& control = {});
InterceptCalibration calibration_intercept(const PredictionSet& preds,
                                           const GlmControl& control = {});
FlexibleCurve calibration_flexible(const PredictionSet& preds, double span, int degree,
                                   const Eigen::Ref<const Eigen::VectorXd>& grid,
                                   double level = 0.95);
/// Quantile groups of mu_hat. Cut points sit at the sorted values at
/// positions floor(b * n / n_bins); every observation with mu_hat >= cut b
/// (and below cut b + 1) falls into bin b, so tied predictions never straddle
/// two bins. Means are accumulated in sorted order.
BinnedCurve calibration_binned(const PredictionSet& preds, int n_bins = 10);

/// `points` equally spaced values between two sample quantiles of `values`.
Eigen::VectorXd quantile_grid(const Eigen::Ref<const Eigen::VectorXd>& values, int points,
                              double lower_prob = 0.01, double upper_prob = 0.99);

Histogram make_histogram(const Eigen::Ref<const Eigen::VectorXd>& values, int bins);

struct AssessOptions {
  double span = 0.75;
  int degree = 2;
  int n_bins = 10;
  int grid_points = 101;
  double grid_lower_prob = 0.01;
  double grid_upper_prob = 0.99;
  int histogram_bins = 30;
  double level = 0.95;
  GlmControl control{};
};

/// Result of one component of an assessment; `error` empty on success.
struct ComponentStatus {
  bool ok = false;
  std::string error;
};

struct CalibrationAssessment {
  std::string label;
  Eigen::Index n = 0;
  FamilySpec family{FamilyKind::poisson};
  LinkSpec link{LinkKind::log};
  std::size_t clamped_count = 0;
  AssessOptions options;

  std::optional<GlmCalibration> slope;
  std::optional<InterceptCalibration> intercept;
  Eigen::VectorXd grid;
  std::optional<Eigen::VectorXd> glm_curve;
  std::optional<FlexibleCurve> flexible;
  std::optional<BinnedCurve> binned;
  Histogram histogram;
  /// Prediction range over all observations.
  double min_prediction = 0.0;
  double max_prediction = 0.0;

  /// Keys: grid, slope, intercept, glm_curve, flexible, binned.
  std::map<std::string, ComponentStatus> status;
  std::vector<std::string> warnings;

  bool all_ok() const;
};

/// Runs every estimator; a failing component is recorded in `status`
/// instead of aborting the others.
CalibrationAssessment assess(const PredictionSet& preds, const AssessOptions& options = {},
                             std::string label = {});

}  // namespace gencal
