#pragma once

#include <Eigen/Dense>
#include <string>
#include <string_view>

namespace gencal {

enum class FamilyKind { bernoulli, poisson, gaussian, gamma };
enum class LinkKind { logit, log, identity, inverse };

/// Link function g: mean -> linear predictor.
class LinkSpec {
 public:
  constexpr explicit LinkSpec(LinkKind kind) : kind_(kind) {}

  LinkKind kind() const noexcept { return kind_; }
  std::string_view name() const noexcept;

  /// True when mu lies strictly inside the link's domain.
  bool in_domain(double mu) const noexcept;

  /// g(mu). No domain check; callers that need one use link_apply().
  double g(double mu) const noexcept;
  double g_inverse(double eta) const noexcept;
  /// d eta / d mu.
  double g_prime(double mu) const noexcept;

  /// Whether the inverse link saturates and needs an |eta| guard (logit, log).
  bool needs_eta_guard() const noexcept {
    return kind_ == LinkKind::logit || kind_ == LinkKind::log;
  }

  friend bool operator==(const LinkSpec&, const LinkSpec&) = default;

 private:
  LinkKind kind_;
};

/// Exponential-family member, described by its variance function and deviance.
class FamilySpec {
 public:
  constexpr explicit FamilySpec(FamilyKind kind) : kind_(kind) {}

  FamilyKind kind() const noexcept { return kind_; }
  std::string_view name() const noexcept;

  /// Dispersion fixed at 1 (Bernoulli, Poisson) or estimated (Gaussian, Gamma).
  bool dispersion_known() const noexcept {
    return kind_ == FamilyKind::bernoulli || kind_ == FamilyKind::poisson;
  }

  LinkSpec canonical_link() const noexcept;

  /// Mean strictly inside the family's range.
  bool valid_mean(double mu) const noexcept;
  /// Outcome inside the family's support.
  bool valid_outcome(double y) const noexcept;

  double variance(double mu) const noexcept;

  /// Per-observation deviance contribution, using 0 * log(0) = 0.
  double unit_deviance(double y, double mu) const noexcept;

  friend bool operator==(const FamilySpec&, const FamilySpec&) = default;

 private:
  FamilyKind kind_;
};

/// Parse lowercase tokens ("poisson", "log", ...). Throws ValidationError.
FamilySpec parse_family(std::string_view token);
LinkSpec parse_link(std::string_view token);

/// g(mu) with a domain check; throws DomainError on or outside the boundary.
double link_apply(const LinkSpec& link, double mu);

/// Sum of w_i * unit_deviance(y_i, mu_i). `weights` may be empty (all ones).
///
/// A mean on the boundary of the family's range is accepted only where it
/// equals the outcome (the saturated limit, e.g. Poisson y = mu = 0).
double deviance(const FamilySpec& family, const Eigen::Ref<const Eigen::VectorXd>& y,
                const Eigen::Ref<const Eigen::VectorXd>& mu,
                const Eigen::Ref<const Eigen::VectorXd>& weights = Eigen::VectorXd());

}  // namespace gencal
