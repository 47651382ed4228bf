#include "gencal/expfam.hpp"

#include <cmath>
#include <sstream>

#include "gencal/error.hpp"

namespace gencal {

namespace {

// y * log(y / mu) with the 0 * log 0 = 0 convention.
double ylogy(double y, double mu) { return y == 0.0 ? 0.0 : y * std::log(y / mu); }

}  // namespace

std::string_view LinkSpec::name() const noexcept {
  switch (kind_) {
    case LinkKind::logit: return "logit";
    case LinkKind::log: return "log";
    case LinkKind::identity: return "identity";
    case LinkKind::inverse: return "inverse";
  }
  return "?";
}

bool LinkSpec::in_domain(double mu) const noexcept {
  if (!std::isfinite(mu)) return false;
  switch (kind_) {
    case LinkKind::logit: return mu > 0.0 && mu < 1.0;
    case LinkKind::log: return mu > 0.0;
    case LinkKind::identity: return true;
    case LinkKind::inverse: return mu != 0.0;
  }
  return false;
}

double LinkSpec::g(double mu) const noexcept {
  switch (kind_) {
    case LinkKind::logit: return std::log(mu / (1.0 - mu));
    case LinkKind::log: return std::log(mu);
    case LinkKind::identity: return mu;
    case LinkKind::inverse: return 1.0 / mu;
  }
  return NAN;
}

double LinkSpec::g_inverse(double eta) const noexcept {
  switch (kind_) {
    case LinkKind::logit:
      // Split on sign so neither branch overflows.
      if (eta >= 0.0) return 1.0 / (1.0 + std::exp(-eta));
      else {
        const double e = std::exp(eta);
        return e / (1.0 + e);
      }
    case LinkKind::log: return std::exp(eta);
    case LinkKind::identity: return eta;
    case LinkKind::inverse: return 1.0 / eta;
  }
  return NAN;
}

double LinkSpec::g_prime(double mu) const noexcept {
  switch (kind_) {
    case LinkKind::logit: return 1.0 / (mu * (1.0 - mu));
    case LinkKind::log: return 1.0 / mu;
    case LinkKind::identity: return 1.0;
    case LinkKind::inverse: return -1.0 / (mu * mu);
  }
  return NAN;
}

std::string_view FamilySpec::name() const noexcept {
  switch (kind_) {
    case FamilyKind::bernoulli: return "bernoulli";
    case FamilyKind::poisson: return "poisson";
    case FamilyKind::gaussian: return "gaussian";
    case FamilyKind::gamma: return "gamma";
  }
  return "?";
}

LinkSpec FamilySpec::canonical_link() const noexcept {
  switch (kind_) {
    case FamilyKind::bernoulli: return LinkSpec(LinkKind::logit);
    case FamilyKind::poisson: return LinkSpec(LinkKind::log);
    case FamilyKind::gaussian: return LinkSpec(LinkKind::identity);
    case FamilyKind::gamma: return LinkSpec(LinkKind::inverse);
  }
  return LinkSpec(LinkKind::identity);
}

bool FamilySpec::valid_mean(double mu) const noexcept {
  if (!std::isfinite(mu)) return false;
  switch (kind_) {
    case FamilyKind::bernoulli: return mu > 0.0 && mu < 1.0;
    case FamilyKind::poisson: return mu > 0.0;
    case FamilyKind::gaussian: return true;
    case FamilyKind::gamma: return mu > 0.0;
  }
  return false;
}

bool FamilySpec::valid_outcome(double y) const noexcept {
  if (!std::isfinite(y)) return false;
  switch (kind_) {
    case FamilyKind::bernoulli: return y == 0.0 || y == 1.0;
    case FamilyKind::poisson: return y >= 0.0;
    case FamilyKind::gaussian: return true;
    case FamilyKind::gamma: return y > 0.0;
  }
  return false;
}

double FamilySpec::variance(double mu) const noexcept {
  switch (kind_) {
    case FamilyKind::bernoulli: return mu * (1.0 - mu);
    case FamilyKind::poisson: return mu;
    case FamilyKind::gaussian: return 1.0;
    case FamilyKind::gamma: return mu * mu;
  }
  return NAN;
}

double FamilySpec::unit_deviance(double y, double mu) const noexcept {
  switch (kind_) {
    case FamilyKind::bernoulli:
      return 2.0 * (ylogy(y, mu) + ylogy(1.0 - y, 1.0 - mu));
    case FamilyKind::poisson:
      return 2.0 * (ylogy(y, mu) - (y - mu));
    case FamilyKind::gaussian:
      return (y - mu) * (y - mu);
    case FamilyKind::gamma:
      return -2.0 * (std::log(y / mu) - (y - mu) / mu);
  }
  return NAN;
}

FamilySpec parse_family(std::string_view token) {
  if (token == "bernoulli" || token == "binomial") return FamilySpec(FamilyKind::bernoulli);
  if (token == "poisson") return FamilySpec(FamilyKind::poisson);
  if (token == "gaussian") return FamilySpec(FamilyKind::gaussian);
  if (token == "gamma") return FamilySpec(FamilyKind::gamma);
  throw ValidationError("unknown family '" + std::string(token) +
                        "' (expected bernoulli, poisson, gaussian or gamma)");
}

LinkSpec parse_link(std::string_view token) {
  if (token == "logit") return LinkSpec(LinkKind::logit);
  if (token == "log") return LinkSpec(LinkKind::log);
  if (token == "identity") return LinkSpec(LinkKind::identity);
  if (token == "inverse") return LinkSpec(LinkKind::inverse);
  throw ValidationError("unknown link '" + std::string(token) +
                        "' (expected logit, log, identity or inverse)");
}

double link_apply(const LinkSpec& link, double mu) {
  if (!link.in_domain(mu)) {
    std::ostringstream os;
    os.precision(17);
    os << link.name() << " link: mean " << mu << " is on or outside the domain boundary";
    throw DomainError(os.str(), mu);
  }
  return link.g(mu);
}

double deviance(const FamilySpec& family, const Eigen::Ref<const Eigen::VectorXd>& y,
                const Eigen::Ref<const Eigen::VectorXd>& mu,
                const Eigen::Ref<const Eigen::VectorXd>& weights) {
  const Eigen::Index n = y.size();
  if (mu.size() != n || (weights.size() != 0 && weights.size() != n)) {
    throw ValidationError("deviance: length mismatch");
  }
  double total = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double yi = y[i];
    const double mi = mu[i];
    if (!family.valid_outcome(yi)) {
      throw DomainError("deviance: outcome outside " + std::string(family.name()) +
                            " support at index " + std::to_string(i),
                        yi);
    }
    if (!family.valid_mean(mi) && !(std::isfinite(mi) && mi == yi)) {
      throw DomainError("deviance: invalid mean at index " + std::to_string(i), mi);
    }
    const double w = weights.size() == 0 ? 1.0 : weights[i];
    if (w < 0.0) throw ValidationError("deviance: negative weight");
    if (w == 0.0) continue;
    total += w * family.unit_deviance(yi, mi);
  }
  return total;
}

}  // namespace gencal
