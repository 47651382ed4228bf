#pragma once

#include <Eigen/Dense>
#include <optional>
#include <string>
#include <vector>

#include "gencal/error.hpp"
#include "gencal/expfam.hpp"

namespace gencal {

/// Named, finite design matrix. Column 0 is the intercept when
/// `intercept_included()`; no other column may be constant.
class DesignMatrix {
 public:
  DesignMatrix(Eigen::MatrixXd values, std::vector<std::string> names,
               bool intercept_included);

  /// Prepends an intercept column named "(Intercept)".
  static DesignMatrix with_intercept(const Eigen::MatrixXd& columns,
                                     std::vector<std::string> names);
  static DesignMatrix intercept_only(Eigen::Index rows);

  const Eigen::MatrixXd& values() const noexcept { return values_; }
  const std::vector<std::string>& names() const noexcept { return names_; }
  bool intercept_included() const noexcept { return intercept_; }
  Eigen::Index rows() const noexcept { return values_.rows(); }
  Eigen::Index cols() const noexcept { return values_.cols(); }

 private:
  Eigen::MatrixXd values_;
  std::vector<std::string> names_;
  bool intercept_;
};

struct GlmControl {
  int max_iter = 50;
  /// Relative deviance change |D_t - D_{t-1}| / (|D_t| + 0.1).
  double tol = 1e-8;
};

/// IRLS ran out of iterations. Carries the deviance trace.
class ConvergenceError : public NumericalError {
 public:
  ConvergenceError(const std::string& what, std::vector<double> trace)
      : NumericalError(what), trace_(std::move(trace)) {}
  const std::vector<double>& trace() const noexcept { return trace_; }

 private:
  std::vector<double> trace_;
};

/// The linear predictor ran past the overflow guard (typically separation).
class DivergenceError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class RankDeficiencyError : public NumericalError {
 public:
  RankDeficiencyError(const std::string& what, std::vector<std::string> columns)
      : NumericalError(what), columns_(std::move(columns)) {}
  /// Columns found linearly dependent on the others.
  const std::vector<std::string>& columns() const noexcept { return columns_; }

 private:
  std::vector<std::string> columns_;
};

struct GlmFit {
  FamilySpec family{FamilyKind::gaussian};
  LinkSpec link{LinkKind::identity};
  std::vector<std::string> column_names;

  Eigen::VectorXd coefficients;
  /// Dispersion-scaled covariance of the coefficients (inverse Fisher information).
  Eigen::MatrixXd covariance;
  /// X * beta, without the offset.
  Eigen::VectorXd linear_predictor;
  Eigen::VectorXd offset;
  /// g^{-1}(linear_predictor + offset).
  Eigen::VectorXd fitted_mean;

  double deviance = 0.0;
  /// Deviance after each IRLS iteration (after any step halving).
  std::vector<double> deviance_trace;
  double dispersion = 1.0;
  /// Norm of the score X' w (y - mu) g'(mu) / ... at the returned estimate.
  double score_norm = 0.0;
  int iterations = 0;
  bool converged = false;
  /// Some |eta| exceeded the guard and was clamped while iterating.
  bool eta_guard_hit = false;

  Eigen::VectorXd standard_errors() const { return covariance.diagonal().cwiseSqrt(); }
};

/// |eta| bound applied to logit/log inverse links while iterating.
inline constexpr double kEtaGuard = 30.0;

/// Fits g(E[y]) = X beta + offset by iteratively reweighted least squares.
///
/// Each step solves the sqrt(w)-scaled working problem by column-pivoted QR.
/// Starting means: Poisson y + 0.1, Bernoulli (y + 0.5) / 2, otherwise y.
/// From the second iteration on, a step that raises the deviance is halved
/// (up to 30 times), so the reported trace is non-increasing.
///
/// Throws ValidationError on bad input, RankDeficiencyError when X is not of
/// full column rank, ConvergenceError / DivergenceError on failure.
GlmFit fit_glm(const Eigen::Ref<const Eigen::VectorXd>& y, const DesignMatrix& X,
               const FamilySpec& family, const LinkSpec& link,
               const std::optional<Eigen::VectorXd>& offset = std::nullopt,
               const std::optional<Eigen::VectorXd>& weights = std::nullopt,
               const GlmControl& control = {});

/// Intercept-only fit with a fixed offset: g(E[y]) = alpha + offset.
GlmFit fit_glm_offset_only(const Eigen::Ref<const Eigen::VectorXd>& y,
                           const Eigen::Ref<const Eigen::VectorXd>& offset,
                           const FamilySpec& family, const LinkSpec& link,
                           const GlmControl& control = {});

/// Mean predictions g^{-1}(X_new beta + offset). Columns must match the fit
/// by name and order.
Eigen::VectorXd predict_glm(const GlmFit& fit, const DesignMatrix& X_new,
                            const std::optional<Eigen::VectorXd>& offset_new = std::nullopt);

}  // namespace gencal
