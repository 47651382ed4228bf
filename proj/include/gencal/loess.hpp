#pragma once

#include <Eigen/Dense>
#include <vector>

namespace gencal {

/// Local polynomial (loess) fit evaluated at a set of points.
struct LoessFit {
  /// Training data, sorted by x (stable).
  Eigen::VectorXd x;
  Eigen::VectorXd y;
  double span = 0.75;
  int degree = 2;

  Eigen::VectorXd eval_points;
  Eigen::VectorXd fitted;
  Eigen::VectorXd se;

  /// Residual standard error and the quantities behind it.
  double sigma = 0.0;
  double trace_hat = 0.0;  ///< tr(L), equivalent number of parameters
  double delta1 = 0.0;     ///< tr((I - L)'(I - L))
};

/// Linear smoother weights at one point: fitted(x0) = sum_k weights[k] * y[first + k]
/// over the sorted training data.
struct LocalWeights {
  Eigen::Index first = 0;
  Eigen::VectorXd weights;
};

/// Number of neighbors used by a span: ceil(span * n), at most n.
Eigen::Index loess_neighbors(double span, Eigen::Index n);

/// Smoother weights at x0 for sorted `xs`. The neighborhood is the q nearest
/// points (ties go to the lower index); kernel weights are tricube in
/// d / d_max and the local polynomial is solved by QR.
LocalWeights loess_local_weights(const Eigen::Ref<const Eigen::VectorXd>& xs, double x0,
                                 Eigen::Index q, int degree);

/// Fits loess of y on x and evaluates it at `eval_points`, which must lie in
/// [min x, max x]. No robustness iterations.
///
/// se(x0)^2 = sigma^2 * |l(x0)|^2 with sigma^2 = RSS / tr((I - L)'(I - L)).
LoessFit loess_fit(const Eigen::Ref<const Eigen::VectorXd>& x,
                   const Eigen::Ref<const Eigen::VectorXd>& y, double span, int degree,
                   const Eigen::Ref<const Eigen::VectorXd>& eval_points);

struct ConfidenceBand {
  Eigen::VectorXd lower;
  Eigen::VectorXd upper;
  double z = 0.0;
};

/// fitted -/+ z * se with z the standard normal quantile of (1 + level) / 2.
ConfidenceBand loess_confidence_band(const LoessFit& fit, double level);

/// Standard normal quantile.
double normal_quantile(double p);

}  // namespace gencal
