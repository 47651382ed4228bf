#include "gencal/loess.hpp"

#include <algorithm>
#include <boost/math/distributions/normal.hpp>
#include <cmath>
#include <numeric>

#include "gencal/error.hpp"

namespace gencal {

Eigen::Index loess_neighbors(double span, Eigen::Index n) {
  const auto q = static_cast<Eigen::Index>(std::ceil(span * static_cast<double>(n) - 1e-9));
  return std::clamp<Eigen::Index>(q, 1, n);
}

LocalWeights loess_local_weights(const Eigen::Ref<const Eigen::VectorXd>& xs, double x0,
                                 Eigen::Index q, int degree) {
  const Eigen::Index n = xs.size();
  // Grow a window [lo, hi) from the insertion point, preferring the left on ties.
  Eigen::Index hi = std::lower_bound(xs.data(), xs.data() + n, x0) - xs.data();
  Eigen::Index lo = hi;
  while (hi - lo < q) {
    if (lo == 0) {
      ++hi;
    } else if (hi == n) {
      --lo;
    } else if (x0 - xs[lo - 1] <= xs[hi] - x0) {
      --lo;
    } else {
      ++hi;
    }
  }
  const double d_max = std::max(x0 - xs[lo], xs[hi - 1] - x0);

  const Eigen::Index m = hi - lo;
  const int p = degree + 1;
  Eigen::VectorXd sqrt_w(m);
  Eigen::MatrixXd B(m, p);
  for (Eigen::Index k = 0; k < m; ++k) {
    const double d = std::fabs(xs[lo + k] - x0);
    double w;
    if (d_max > 0.0) {
      const double u = d / d_max;
      w = u < 1.0 ? std::pow(1.0 - u * u * u, 3) : 0.0;
    } else {
      w = 1.0;
    }
    sqrt_w[k] = std::sqrt(w);
    const double t = d_max > 0.0 ? (xs[lo + k] - x0) / d_max : 0.0;
    double power = 1.0;
    for (int j = 0; j < p; ++j) {
      B(k, j) = sqrt_w[k] * power;
      power *= t;
    }
  }

  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(B);
  qr.setThreshold(1e-10);
  if (qr.rank() < p) {
    throw ValidationError("loess: local design is singular near x0 = " + std::to_string(x0) +
                          " (too few distinct neighbors for degree " + std::to_string(degree) +
                          ")");
  }
  // Row 0 of pinv(B) = e0' P R^{-1} Q'. With B P = Q R: solve R' v = P' e0.
  Eigen::VectorXd e0 = Eigen::VectorXd::Zero(p);
  e0[0] = 1.0;
  const Eigen::VectorXd pe = qr.colsPermutation().transpose() * e0;
  const Eigen::MatrixXd R = qr.matrixR().topLeftCorner(p, p);
  const Eigen::VectorXd v = R.transpose().triangularView<Eigen::Lower>().solve(pe);
  Eigen::VectorXd padded = Eigen::VectorXd::Zero(m);
  padded.head(p) = v;
  const Eigen::VectorXd row = qr.householderQ() * padded;

  return {lo, sqrt_w.cwiseProduct(row)};
}

LoessFit loess_fit(const Eigen::Ref<const Eigen::VectorXd>& x_in,
                   const Eigen::Ref<const Eigen::VectorXd>& y_in, double span, int degree,
                   const Eigen::Ref<const Eigen::VectorXd>& eval_points) {
  const Eigen::Index n = x_in.size();
  if (y_in.size() != n) throw ValidationError("loess: x and y lengths differ");
  if (degree != 1 && degree != 2) throw ValidationError("loess: degree must be 1 or 2");
  if (!(span > 0.0 && span <= 1.0)) throw ValidationError("loess: span must be in (0, 1]");
  if (n < degree + 2) {
    throw ValidationError("loess: need at least " + std::to_string(degree + 2) + " points, got " +
                          std::to_string(n));
  }
  if (span * static_cast<double>(n) < degree + 1) {
    throw ValidationError("loess: span too small for degree " + std::to_string(degree));
  }
  if (!x_in.allFinite() || !y_in.allFinite()) throw ValidationError("loess: non-finite data");

  std::vector<Eigen::Index> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](Eigen::Index a, Eigen::Index b) { return x_in[a] < x_in[b]; });
  LoessFit fit;
  fit.span = span;
  fit.degree = degree;
  fit.x.resize(n);
  fit.y.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    fit.x[i] = x_in[order[i]];
    fit.y[i] = y_in[order[i]];
  }
  if (fit.x[0] == fit.x[n - 1]) throw ValidationError("loess: x has no variation");
  for (Eigen::Index k = 0; k < eval_points.size(); ++k) {
    if (!(eval_points[k] >= fit.x[0] && eval_points[k] <= fit.x[n - 1])) {
      throw ValidationError("loess: evaluation point " + std::to_string(eval_points[k]) +
                            " outside the data range (extrapolation)");
    }
  }
  const Eigen::Index q = loess_neighbors(span, n);

  // Residual scale from the smoother matrix rows at the data points.
  double rss = 0.0, trace = 0.0, sum_sq = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const LocalWeights lw = loess_local_weights(fit.x, fit.x[i], q, degree);
    const double f = lw.weights.dot(fit.y.segment(lw.first, lw.weights.size()));
    const double r = fit.y[i] - f;
    rss += r * r;
    if (i >= lw.first && i < lw.first + lw.weights.size()) trace += lw.weights[i - lw.first];
    sum_sq += lw.weights.squaredNorm();
  }
  fit.trace_hat = trace;
  fit.delta1 = static_cast<double>(n) - 2.0 * trace + sum_sq;
  fit.sigma = fit.delta1 > 0.0 ? std::sqrt(rss / fit.delta1) : 0.0;

  fit.eval_points = eval_points;
  fit.fitted.resize(eval_points.size());
  fit.se.resize(eval_points.size());
  for (Eigen::Index k = 0; k < eval_points.size(); ++k) {
    const LocalWeights lw = loess_local_weights(fit.x, eval_points[k], q, degree);
    fit.fitted[k] = lw.weights.dot(fit.y.segment(lw.first, lw.weights.size()));
    fit.se[k] = fit.sigma * lw.weights.norm();
  }
  return fit;
}

double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) throw ValidationError("normal_quantile: p must be in (0, 1)");
  return boost::math::quantile(boost::math::normal_distribution<double>(), p);
}

ConfidenceBand loess_confidence_band(const LoessFit& fit, double level) {
  if (!(level > 0.0 && level < 1.0)) {
    throw ValidationError("loess_confidence_band: level must be in (0, 1)");
  }
  ConfidenceBand band;
  band.z = normal_quantile((1.0 + level) / 2.0);
  band.lower = fit.fitted - band.z * fit.se;
  band.upper = fit.fitted + band.z * fit.se;
  return band;
}

}  // namespace gencal
