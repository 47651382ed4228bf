#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

namespace gencal {

/// Clamped B-spline basis: boundary knots repeated degree + 1 times, interior
/// knots at equally spaced quantiles of the training values.
class SplineBasis {
 public:
  SplineBasis(std::vector<double> interior_knots, double lower, double upper, int degree,
              std::string prefix = "s");

  int degree() const noexcept { return degree_; }
  /// Full knot vector, boundary knots repeated.
  const std::vector<double>& knots() const noexcept { return knots_; }
  const std::vector<double>& interior_knots() const noexcept { return interior_; }
  double lower() const noexcept { return knots_.front(); }
  double upper() const noexcept { return knots_.back(); }
  /// interior + degree + 1.
  int size() const noexcept { return static_cast<int>(interior_.size()) + degree_ + 1; }
  /// One label per basis function, e.g. "s(x5).1".
  const std::vector<std::string>& column_names() const noexcept { return names_; }

  /// All basis functions at x (n x size()). Outside [lower, upper] the edge
  /// polynomial pieces are continued, so rows still sum to one.
  Eigen::MatrixXd evaluate(const Eigen::Ref<const Eigen::VectorXd>& x) const;

 private:
  void evaluate_row(double x, Eigen::Ref<Eigen::RowVectorXd, 0, Eigen::InnerStride<>> out) const;

  std::vector<double> interior_;
  std::vector<double> knots_;
  int degree_;
  std::vector<std::string> names_;
};

struct SplineExpansion {
  SplineBasis basis;
  Eigen::MatrixXd columns;
};

/// Builds a basis from x with `n_interior_knots` knots at the j/(k+1) sample
/// quantiles and evaluates it at x. Throws ValidationError if x has too few
/// distinct values to give strictly increasing knots.
SplineExpansion build_spline_basis(const Eigen::Ref<const Eigen::VectorXd>& x,
                                   int n_interior_knots, int degree = 3,
                                   const std::string& prefix = "s");

/// Sample quantile with linear interpolation between order statistics
/// (type 7). `sorted` must be ascending and nonempty.
double quantile_sorted(const std::vector<double>& sorted, double prob);

}  // namespace gencal
