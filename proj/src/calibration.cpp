#include "gencal/calibration.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "gencal/loess.hpp"
#include "gencal/spline.hpp"

namespace gencal {

namespace {

bool on_lower_boundary(const LinkSpec& link, double mu) {
  return mu == 0.0 && (link.kind() == LinkKind::log || link.kind() == LinkKind::logit ||
                       link.kind() == LinkKind::inverse);
}

bool on_upper_boundary(const LinkSpec& link, double mu) {
  return mu == 1.0 && link.kind() == LinkKind::logit;
}

Eigen::VectorXd transformed(const PredictionSet& preds) {
  Eigen::VectorXd eta(preds.size());
  for (Eigen::Index i = 0; i < preds.size(); ++i) eta[i] = link_apply(preds.link, preds.mu_hat[i]);
  return eta;
}

std::vector<Eigen::Index> sorted_order(const Eigen::VectorXd& v) {
  std::vector<Eigen::Index> order(v.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](Eigen::Index a, Eigen::Index b) { return v[a] < v[b]; });
  return order;
}

}  // namespace

PredictionSet make_prediction_set(Eigen::VectorXd y_obs, Eigen::VectorXd mu_hat,
                                  const FamilySpec& family, std::optional<LinkSpec> link,
                                  Eigen::Index min_size) {
  if (y_obs.size() != mu_hat.size()) {
    throw ValidationError("prediction set: " + std::to_string(y_obs.size()) + " outcomes but " +
                          std::to_string(mu_hat.size()) + " predictions");
  }
  if (y_obs.size() < min_size) {
    throw ValidationError("prediction set: need at least " + std::to_string(min_size) +
                          " observations, got " + std::to_string(y_obs.size()));
  }
  PredictionSet preds;
  preds.family = family;
  preds.link = link.value_or(family.canonical_link());
  for (Eigen::Index i = 0; i < y_obs.size(); ++i) {
    if (!family.valid_outcome(y_obs[i])) {
      std::ostringstream os;
      os << "prediction set: row " << i + 1 << ": outcome " << y_obs[i] << " outside "
         << family.name() << " support";
      throw DomainError(os.str(), y_obs[i]);
    }
    double& m = mu_hat[i];
    if (on_lower_boundary(preds.link, m)) {
      m = kBoundaryClamp;
      ++preds.clamped_count;
    } else if (on_upper_boundary(preds.link, m)) {
      m = 1.0 - kBoundaryClamp;
      ++preds.clamped_count;
    }
    if (!preds.link.in_domain(m)) {
      std::ostringstream os;
      os << "prediction set: row " << i + 1 << ": prediction " << m << " outside the "
         << preds.link.name() << " link domain";
      throw DomainError(os.str(), m);
    }
  }
  preds.y_obs = std::move(y_obs);
  preds.mu_hat = std::move(mu_hat);
  return preds;
}

Eigen::VectorXd GlmCalibration::curve(const LinkSpec& link,
                                      const Eigen::Ref<const Eigen::VectorXd>& grid) const {
  Eigen::VectorXd out(grid.size());
  for (Eigen::Index k = 0; k < grid.size(); ++k) {
    out[k] = link.g_inverse(alpha + zeta * link_apply(link, grid[k]));
  }
  return out;
}

GlmCalibration calibration_glm(const PredictionSet& preds, const GlmControl& control) {
  const Eigen::VectorXd eta = transformed(preds);
  if ((eta.array() == eta[0]).all()) {
    throw IllPosedError("calibration slope: all predictions are equal");
  }
  const DesignMatrix X =
      DesignMatrix::with_intercept(eta, {std::string(preds.link.name()) + "(mu_hat)"});
  GlmCalibration out;
  try {
    out.fit = fit_glm(preds.y_obs, X, preds.family, preds.link, std::nullopt, std::nullopt,
                      control);
  } catch (const NumericalError& e) {
    throw NumericalError(std::string("calibration slope: ") + e.what());
  }
  const Eigen::VectorXd se = out.fit.standard_errors();
  out.alpha = out.fit.coefficients[0];
  out.zeta = out.fit.coefficients[1];
  out.alpha_se = se[0];
  out.zeta_se = se[1];
  return out;
}

InterceptCalibration calibration_intercept(const PredictionSet& preds, const GlmControl& control) {
  const Eigen::VectorXd offset = transformed(preds);
  InterceptCalibration out;
  try {
    out.fit = fit_glm_offset_only(preds.y_obs, offset, preds.family, preds.link, control);
  } catch (const NumericalError& e) {
    throw NumericalError(std::string("calibration intercept: ") + e.what());
  }
  out.alpha_c = out.fit.coefficients[0];
  out.se = std::sqrt(out.fit.covariance(0, 0));
  return out;
}

FlexibleCurve calibration_flexible(const PredictionSet& preds, double span, int degree,
                                   const Eigen::Ref<const Eigen::VectorXd>& grid, double level) {
  if ((preds.mu_hat.array() == preds.mu_hat[0]).all()) {
    throw IllPosedError("flexible curve: all predictions are equal");
  }
  const LoessFit fit = loess_fit(preds.mu_hat, preds.y_obs, span, degree, grid);
  const ConfidenceBand band = loess_confidence_band(fit, level);
  return {fit.eval_points, fit.fitted, fit.se, band.lower, band.upper, level, band.z};
}

BinnedCurve calibration_binned(const PredictionSet& preds, int n_bins) {
  const Eigen::Index n = preds.size();
  if (n_bins < 1) throw ValidationError("binned curve: need at least one bin");
  if (n < n_bins) {
    throw ValidationError("binned curve: " + std::to_string(n) + " observations for " +
                          std::to_string(n_bins) + " bins");
  }
  const std::vector<Eigen::Index> order = sorted_order(preds.mu_hat);
  std::vector<double> cuts;
  for (int b = 1; b < n_bins; ++b) {
    cuts.push_back(preds.mu_hat[order[static_cast<std::size_t>(b * n / n_bins)]]);
  }
  std::vector<double> sum_pred(n_bins, 0.0), sum_obs(n_bins, 0.0);
  std::vector<std::size_t> count(n_bins, 0);
  for (Eigen::Index idx : order) {
    const double m = preds.mu_hat[idx];
    const auto b = std::upper_bound(cuts.begin(), cuts.end(), m) - cuts.begin();
    sum_pred[b] += m;
    sum_obs[b] += preds.y_obs[idx];
    ++count[b];
  }
  BinnedCurve out;
  for (int b = 0; b < n_bins; ++b) {
    if (count[b] == 0) {
      ++out.merged_bins;
      continue;
    }
    const double c = static_cast<double>(count[b]);
    out.bins.push_back({sum_pred[b] / c, sum_obs[b] / c, count[b]});
  }
  if (out.merged_bins > 0) {
    out.warnings.push_back("tied predictions left " + std::to_string(out.merged_bins) +
                           " of " + std::to_string(n_bins) +
                           " quantile bins empty; they were merged into their neighbors");
  }
  return out;
}

Eigen::VectorXd quantile_grid(const Eigen::Ref<const Eigen::VectorXd>& values, int points,
                              double lower_prob, double upper_prob) {
  if (points < 2) throw ValidationError("grid: need at least two points");
  if (!(0.0 <= lower_prob && lower_prob < upper_prob && upper_prob <= 1.0)) {
    throw ValidationError("grid: invalid quantile bounds");
  }
  std::vector<double> sorted(values.data(), values.data() + values.size());
  std::sort(sorted.begin(), sorted.end());
  const double lo = quantile_sorted(sorted, lower_prob);
  const double hi = quantile_sorted(sorted, upper_prob);
  if (!(lo < hi)) throw IllPosedError("grid: prediction quantiles coincide; no spread to plot");
  Eigen::VectorXd grid = Eigen::VectorXd::LinSpaced(points, lo, hi);
  grid[points - 1] = hi;
  return grid;
}

Histogram make_histogram(const Eigen::Ref<const Eigen::VectorXd>& values, int bins) {
  if (bins < 1) throw ValidationError("histogram: need at least one bin");
  if (values.size() == 0) throw ValidationError("histogram: no values");
  double lo = values.minCoeff();
  double hi = values.maxCoeff();
  if (lo == hi) {
    lo -= 0.5;
    hi += 0.5;
  }
  Histogram h;
  h.edges.resize(bins + 1);
  for (int b = 0; b <= bins; ++b) h.edges[b] = lo + (hi - lo) * b / bins;
  h.edges[bins] = hi;
  h.counts.assign(bins, 0);
  const double width = (hi - lo) / bins;
  for (Eigen::Index i = 0; i < values.size(); ++i) {
    auto b = static_cast<int>((values[i] - lo) / width);
    ++h.counts[std::clamp(b, 0, bins - 1)];
  }
  return h;
}

bool CalibrationAssessment::all_ok() const {
  return std::all_of(status.begin(), status.end(), [](const auto& kv) { return kv.second.ok; });
}

CalibrationAssessment assess(const PredictionSet& preds, const AssessOptions& options,
                             std::string label) {
  CalibrationAssessment a;
  a.label = std::move(label);
  a.n = preds.size();
  a.family = preds.family;
  a.link = preds.link;
  a.clamped_count = preds.clamped_count;
  a.options = options;
  a.min_prediction = preds.mu_hat.minCoeff();
  a.max_prediction = preds.mu_hat.maxCoeff();
  if (preds.clamped_count > 0) {
    a.warnings.push_back(std::to_string(preds.clamped_count) +
                         " predictions on the link boundary were clamped inward by 1e-10");
  }

  auto run = [&](const std::string& name, auto&& body) {
    try {
      body();
      a.status[name] = {true, {}};
    } catch (const std::exception& e) {
      a.status[name] = {false, e.what()};
    }
  };

  run("grid", [&] {
    a.grid = quantile_grid(preds.mu_hat, options.grid_points, options.grid_lower_prob,
                           options.grid_upper_prob);
  });
  run("slope", [&] { a.slope = calibration_glm(preds, options.control); });
  run("intercept", [&] { a.intercept = calibration_intercept(preds, options.control); });
  run("glm_curve", [&] {
    if (!a.slope) throw Error("no slope estimate");
    if (a.grid.size() == 0) throw Error("no grid");
    a.glm_curve = a.slope->curve(preds.link, a.grid);
  });
  run("flexible", [&] {
    if (a.grid.size() == 0) {
      if ((preds.mu_hat.array() == preds.mu_hat[0]).all()) {
        throw IllPosedError("flexible curve: all predictions are equal");
      }
      throw Error("no grid");
    }
    a.flexible = calibration_flexible(preds, options.span, options.degree, a.grid, options.level);
  });
  run("binned", [&] {
    a.binned = calibration_binned(preds, options.n_bins);
    for (const auto& w : a.binned->warnings) a.warnings.push_back(w);
  });
  a.histogram = make_histogram(preds.mu_hat, options.histogram_bins);

  if (a.slope && !(a.slope->zeta > 0.0)) {
    a.warnings.push_back("calibration slope is not positive: predictions are anti-calibrated");
  }
  if (a.slope && a.slope->fit.eta_guard_hit) {
    a.warnings.push_back("calibration slope fit hit the linear-predictor guard");
  }
  return a;
}

}  // namespace gencal
