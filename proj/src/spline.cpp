#include "gencal/spline.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "gencal/error.hpp"

namespace gencal {

double quantile_sorted(const std::vector<double>& sorted, double prob) {
  if (sorted.empty()) throw ValidationError("quantile of empty sample");
  const double h = (static_cast<double>(sorted.size()) - 1.0) * prob;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

SplineBasis::SplineBasis(std::vector<double> interior_knots, double lower, double upper,
                         int degree, std::string prefix)
    : interior_(std::move(interior_knots)), degree_(degree) {
  if (degree_ < 0) throw ValidationError("SplineBasis: negative degree");
  if (!(lower < upper)) throw ValidationError("SplineBasis: empty range");
  double prev = lower;
  for (double k : interior_) {
    if (!(k > prev)) throw ValidationError("SplineBasis: knots must be strictly increasing");
    prev = k;
  }
  if (!(upper > prev)) throw ValidationError("SplineBasis: knot beyond upper bound");
  knots_.assign(degree_ + 1, lower);
  knots_.insert(knots_.end(), interior_.begin(), interior_.end());
  knots_.insert(knots_.end(), degree_ + 1, upper);
  for (int j = 1; j <= size(); ++j) names_.push_back(prefix + "." + std::to_string(j));
}

// Nonzero basis functions on one knot span (Piegl & Tiller, algorithm A2.2).
void SplineBasis::evaluate_row(double x, Eigen::Ref<Eigen::RowVectorXd, 0, Eigen::InnerStride<>> out) const {
  const int p = degree_;
  const int n_spans = static_cast<int>(interior_.size()) + 1;
  // Span index in the knot vector: knots_[span] <= x < knots_[span + 1].
  int span = p + static_cast<int>(std::upper_bound(interior_.begin(), interior_.end(), x) -
                                  interior_.begin());
  span = std::clamp(span, p, p + n_spans - 1);

  std::vector<double> N(p + 1), left(p + 1), right(p + 1);
  N[0] = 1.0;
  for (int j = 1; j <= p; ++j) {
    left[j] = x - knots_[span + 1 - j];
    right[j] = knots_[span + j] - x;
    double saved = 0.0;
    for (int r = 0; r < j; ++r) {
      const double temp = N[r] / (right[r + 1] + left[j - r]);
      N[r] = saved + right[r + 1] * temp;
      saved = left[j - r] * temp;
    }
    N[j] = saved;
  }
  out.setZero();
  for (int j = 0; j <= p; ++j) out[span - p + j] = N[j];
}

Eigen::MatrixXd SplineBasis::evaluate(const Eigen::Ref<const Eigen::VectorXd>& x) const {
  Eigen::MatrixXd B(x.size(), size());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    if (!std::isfinite(x[i])) throw ValidationError("SplineBasis: non-finite input");
    evaluate_row(x[i], B.row(i));
  }
  return B;
}

SplineExpansion build_spline_basis(const Eigen::Ref<const Eigen::VectorXd>& x,
                                   int n_interior_knots, int degree, const std::string& prefix) {
  if (n_interior_knots < 0) throw ValidationError("build_spline_basis: negative knot count");
  if (x.size() == 0) throw ValidationError("build_spline_basis: empty input");
  std::vector<double> sorted(x.data(), x.data() + x.size());
  for (double v : sorted) {
    if (!std::isfinite(v)) throw ValidationError("build_spline_basis: non-finite input");
  }
  std::sort(sorted.begin(), sorted.end());
  const std::set<double> distinct(sorted.begin(), sorted.end());
  // Knots need room strictly between the boundaries.
  if (static_cast<int>(distinct.size()) < n_interior_knots + 2) {
    throw ValidationError("build_spline_basis: " + std::to_string(distinct.size()) +
                          " distinct values cannot support " +
                          std::to_string(n_interior_knots) + " interior knots");
  }
  std::vector<double> interior;
  for (int j = 1; j <= n_interior_knots; ++j) {
    interior.push_back(quantile_sorted(sorted, static_cast<double>(j) / (n_interior_knots + 1)));
  }
  for (std::size_t j = 0; j < interior.size(); ++j) {
    const double prev = j == 0 ? sorted.front() : interior[j - 1];
    if (!(interior[j] > prev) || !(interior[j] < sorted.back())) {
      throw ValidationError("build_spline_basis: quantile knots are not distinct (ties in x)");
    }
  }
  SplineBasis basis(std::move(interior), sorted.front(), sorted.back(), degree, prefix);
  Eigen::MatrixXd cols = basis.evaluate(x);
  return {std::move(basis), std::move(cols)};
}

}  // namespace gencal
