#include "gencal/glm.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace gencal {

DesignMatrix::DesignMatrix(Eigen::MatrixXd values, std::vector<std::string> names,
                           bool intercept_included)
    : values_(std::move(values)), names_(std::move(names)), intercept_(intercept_included) {
  if (static_cast<Eigen::Index>(names_.size()) != values_.cols()) {
    throw ValidationError("DesignMatrix: " + std::to_string(names_.size()) + " names for " +
                          std::to_string(values_.cols()) + " columns");
  }
  if (!values_.allFinite()) throw ValidationError("DesignMatrix: non-finite entry");
  for (Eigen::Index j = 0; j < values_.cols(); ++j) {
    if (values_.rows() == 0) break;
    const auto col = values_.col(j);
    const bool constant = (col.array() == col[0]).all();
    const bool is_intercept = intercept_ && j == 0;
    if (is_intercept && !(col.array() == 1.0).all()) {
      throw ValidationError("DesignMatrix: intercept column is not all ones");
    }
    if (constant && !is_intercept && values_.rows() > 1) {
      throw ValidationError("DesignMatrix: column '" + names_[j] + "' is constant");
    }
  }
}

DesignMatrix DesignMatrix::with_intercept(const Eigen::MatrixXd& columns,
                                          std::vector<std::string> names) {
  Eigen::MatrixXd v(columns.rows(), columns.cols() + 1);
  v.col(0).setOnes();
  v.rightCols(columns.cols()) = columns;
  names.insert(names.begin(), "(Intercept)");
  return DesignMatrix(std::move(v), std::move(names), true);
}

DesignMatrix DesignMatrix::intercept_only(Eigen::Index rows) {
  return DesignMatrix(Eigen::MatrixXd::Ones(rows, 1), {"(Intercept)"}, true);
}

namespace {

double initial_mean(const FamilySpec& family, double y) {
  switch (family.kind()) {
    case FamilyKind::poisson: return y + 0.1;
    case FamilyKind::bernoulli: return (y + 0.5) / 2.0;
    default: return y;
  }
}

double guarded(const LinkSpec& link, double eta, bool& hit) {
  if (link.needs_eta_guard() && std::fabs(eta) > kEtaGuard) {
    hit = true;
    return std::copysign(kEtaGuard, eta);
  }
  return eta;
}

void check_rank(const DesignMatrix& X) {
  // Unit-norm columns make the pivot threshold scale free.
  Eigen::MatrixXd scaled = X.values();
  for (Eigen::Index j = 0; j < scaled.cols(); ++j) {
    const double norm = scaled.col(j).norm();
    if (norm > 0.0) scaled.col(j) /= norm;
  }
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(scaled);
  qr.setThreshold(1e-10);
  const Eigen::Index rank = qr.rank();
  if (rank == X.cols()) return;
  std::vector<std::string> dropped;
  const auto& perm = qr.colsPermutation().indices();
  for (Eigen::Index k = rank; k < X.cols(); ++k) dropped.push_back(X.names()[perm[k]]);
  std::sort(dropped.begin(), dropped.end());
  std::string list;
  for (const auto& d : dropped) list += (list.empty() ? "" : ", ") + d;
  throw RankDeficiencyError("design matrix is rank deficient (rank " + std::to_string(rank) +
                                " of " + std::to_string(X.cols()) + "); collinear: " + list,
                            dropped);
}

struct Working {
  Eigen::VectorXd sqrt_w;
  Eigen::VectorXd z;
};

Working working_response(const FamilySpec& family, const LinkSpec& link,
                         const Eigen::VectorXd& y, const Eigen::VectorXd& mu,
                         const Eigen::VectorXd& eta_no_offset,
                         const Eigen::VectorXd& prior) {
  const Eigen::Index n = y.size();
  Working out{Eigen::VectorXd(n), Eigen::VectorXd(n)};
  for (Eigen::Index i = 0; i < n; ++i) {
    const double gp = link.g_prime(mu[i]);
    out.z[i] = eta_no_offset[i] + (y[i] - mu[i]) * gp;
    out.sqrt_w[i] = std::sqrt(prior[i] / (family.variance(mu[i]) * gp * gp));
  }
  return out;
}

}  // namespace

GlmFit fit_glm(const Eigen::Ref<const Eigen::VectorXd>& y_in, const DesignMatrix& X,
               const FamilySpec& family, const LinkSpec& link,
               const std::optional<Eigen::VectorXd>& offset_in,
               const std::optional<Eigen::VectorXd>& weights_in, const GlmControl& control) {
  const Eigen::Index n = y_in.size();
  const Eigen::Index p = X.cols();
  if (X.rows() != n) throw ValidationError("fit_glm: X has " + std::to_string(X.rows()) +
                                           " rows, y has " + std::to_string(n));
  if (n == 0 || p == 0) throw ValidationError("fit_glm: empty problem");
  if (n < p) throw ValidationError("fit_glm: fewer observations than coefficients");
  const Eigen::VectorXd y = y_in;
  const Eigen::VectorXd offset = offset_in ? *offset_in : Eigen::VectorXd::Zero(n);
  const Eigen::VectorXd prior = weights_in ? *weights_in : Eigen::VectorXd::Ones(n);
  if (offset.size() != n) throw ValidationError("fit_glm: offset length mismatch");
  if (prior.size() != n) throw ValidationError("fit_glm: weights length mismatch");
  if (!offset.allFinite()) throw ValidationError("fit_glm: non-finite offset");
  for (Eigen::Index i = 0; i < n; ++i) {
    if (!family.valid_outcome(y[i])) {
      throw DomainError("fit_glm: outcome at row " + std::to_string(i) + " outside " +
                            std::string(family.name()) + " support",
                        y[i]);
    }
    if (!(prior[i] >= 0.0) || !std::isfinite(prior[i])) {
      throw ValidationError("fit_glm: invalid weight at row " + std::to_string(i));
    }
  }
  if (control.max_iter < 1 || !(control.tol > 0.0)) {
    throw ValidationError("fit_glm: invalid controls");
  }
  check_rank(X);

  const Eigen::MatrixXd& Xv = X.values();
  bool guard_hit = false;

  Eigen::VectorXd mu(n);
  Eigen::VectorXd eta_lin(n);  // without offset
  for (Eigen::Index i = 0; i < n; ++i) {
    mu[i] = initial_mean(family, y[i]);
    if (!link.in_domain(mu[i])) {
      throw DomainError("fit_glm: starting mean outside link domain at row " +
                            std::to_string(i),
                        mu[i]);
    }
    eta_lin[i] = link.g(mu[i]) - offset[i];
  }
  double dev_old = deviance(family, y, mu, prior);

  auto evaluate = [&](const Eigen::VectorXd& beta, Eigen::VectorXd& eta_out,
                      Eigen::VectorXd& mu_out) {
    eta_out = Xv * beta;
    mu_out.resize(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      mu_out[i] = link.g_inverse(guarded(link, eta_out[i] + offset[i], guard_hit));
      if (!family.valid_mean(mu_out[i])) return std::numeric_limits<double>::infinity();
    }
    return deviance(family, y, mu_out, prior);
  };

  GlmFit fit;
  fit.family = family;
  fit.link = link;
  fit.column_names = X.names();
  Eigen::VectorXd beta;
  Eigen::VectorXd beta_prev;
  Eigen::VectorXd beta_last;
  bool converged = false;
  int iter = 0;
  for (iter = 1; iter <= control.max_iter; ++iter) {
    const Working wk = working_response(family, link, y, mu, eta_lin, prior);
    const Eigen::MatrixXd A = wk.sqrt_w.asDiagonal() * Xv;
    const Eigen::VectorXd b = wk.sqrt_w.cwiseProduct(wk.z);
    Eigen::VectorXd beta_new = A.colPivHouseholderQr().solve(b);
    if (!beta_new.allFinite()) {
      throw DivergenceError("fit_glm: non-finite coefficients at iteration " +
                            std::to_string(iter));
    }

    Eigen::VectorXd eta_new, mu_new;
    double dev = evaluate(beta_new, eta_new, mu_new);
    if (iter > 1) {
      int halvings = 0;
      while (!(dev <= dev_old + 1e-12 * std::fabs(dev_old)) && halvings < 30) {
        beta_new = 0.5 * (beta_new + beta_prev);
        dev = evaluate(beta_new, eta_new, mu_new);
        ++halvings;
      }
      if (!(dev <= dev_old + 1e-12 * std::fabs(dev_old))) {
        // Cannot improve on the previous estimate: it is the fixed point.
        beta_new = beta_prev;
        dev = evaluate(beta_new, eta_new, mu_new);
      }
    } else if (!std::isfinite(dev)) {
      throw DivergenceError("fit_glm: invalid fitted means after first iteration");
    }

    fit.deviance_trace.push_back(dev);
    beta_prev = beta_new;
    beta = beta_new;
    eta_lin = eta_new;
    mu = mu_new;
    const double change = std::fabs(dev - dev_old) / (std::fabs(dev) + 0.1);
    const double step = iter > 1 ? (beta - beta_last).lpNorm<Eigen::Infinity>() : INFINITY;
    beta_last = beta;
    dev_old = dev;
    // The deviance settles long before the coefficients do; one or two
    // more Newton steps pin them to rounding level.
    if (change < control.tol && step <= 1e-10 * (beta.lpNorm<Eigen::Infinity>() + 1.0)) {
      converged = true;
      break;
    }
  }

  double max_eta = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) max_eta = std::max(max_eta, std::fabs(eta_lin[i] + offset[i]));
  if (converged && link.needs_eta_guard() && max_eta >= kEtaGuard) {
    std::ostringstream os;
    os << "fit_glm: linear predictor reached the overflow guard (|eta| = " << max_eta
       << "); possible separation";
    throw DivergenceError(os.str());
  }

  if (!converged) {
    if (link.needs_eta_guard() && max_eta > kEtaGuard) {
      std::ostringstream os;
      os << "fit_glm: linear predictor diverged (max |eta| = " << max_eta
         << " > " << kEtaGuard << "); possible separation";
      throw DivergenceError(os.str());
    }
    std::ostringstream os;
    os << "fit_glm: no convergence after " << control.max_iter << " iterations; deviance trace:";
    for (double d : fit.deviance_trace) os << ' ' << d;
    throw ConvergenceError(os.str(), fit.deviance_trace);
  }

  fit.coefficients = beta;
  fit.linear_predictor = eta_lin;
  fit.offset = offset;
  fit.fitted_mean.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) fit.fitted_mean[i] = link.g_inverse(eta_lin[i] + offset[i]);
  fit.deviance = dev_old;
  fit.iterations = iter;
  fit.converged = true;
  fit.eta_guard_hit = guard_hit;

  // Fisher information at the estimate, plus the score for diagnostics.
  Eigen::VectorXd sqrt_w(n), score_terms(n);
  double pearson = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double m = fit.fitted_mean[i];
    const double gp = link.g_prime(m);
    const double v = family.variance(m);
    sqrt_w[i] = std::sqrt(prior[i] / (v * gp * gp));
    score_terms[i] = prior[i] * (y[i] - m) / (v * gp);
    pearson += prior[i] * (y[i] - m) * (y[i] - m) / v;
  }
  fit.score_norm = (Xv.transpose() * score_terms).norm();
  if (!family.dispersion_known()) {
    fit.dispersion = n > p ? pearson / static_cast<double>(n - p) : NAN;
  }
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(sqrt_w.asDiagonal() * Xv);
  const Eigen::MatrixXd R = qr.matrixR().topLeftCorner(p, p).triangularView<Eigen::Upper>();
  const Eigen::MatrixXd R_inv =
      R.triangularView<Eigen::Upper>().solve(Eigen::MatrixXd::Identity(p, p));
  const Eigen::MatrixXd cov_perm = R_inv * R_inv.transpose();
  const auto& P = qr.colsPermutation();
  fit.covariance = fit.dispersion * (P * cov_perm * P.transpose());
  return fit;
}

GlmFit fit_glm_offset_only(const Eigen::Ref<const Eigen::VectorXd>& y,
                           const Eigen::Ref<const Eigen::VectorXd>& offset,
                           const FamilySpec& family, const LinkSpec& link,
                           const GlmControl& control) {
  return fit_glm(y, DesignMatrix::intercept_only(y.size()), family, link,
                 Eigen::VectorXd(offset), std::nullopt, control);
}

Eigen::VectorXd predict_glm(const GlmFit& fit, const DesignMatrix& X_new,
                            const std::optional<Eigen::VectorXd>& offset_new) {
  if (X_new.names() != fit.column_names) {
    throw ValidationError("predict_glm: columns do not match the fitted model");
  }
  Eigen::VectorXd eta = X_new.values() * fit.coefficients;
  if (offset_new) {
    if (offset_new->size() != eta.size()) throw ValidationError("predict_glm: offset length mismatch");
    eta += *offset_new;
  }
  Eigen::VectorXd mu(eta.size());
  for (Eigen::Index i = 0; i < eta.size(); ++i) mu[i] = fit.link.g_inverse(eta[i]);
  return mu;
}

}  // namespace gencal
