#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "gencal/rng.hpp"

namespace gencal {

/// Simulation design: correlated normal covariates rescaled to [-1, 1],
/// Poisson outcomes with log(lambda) = beta0 + x' beta.
struct SimConfig {
  std::size_t n_population = 1'000'000;
  std::size_t n_train = 5000;
  std::size_t n_valid = 1000;
  /// Intercept followed by five slopes.
  Eigen::VectorXd beta = default_beta();
  Eigen::MatrixXd sigma = default_sigma();
  std::uint64_t seed = 1;

  static Eigen::VectorXd default_beta();
  static Eigen::MatrixXd default_sigma();

  /// Throws ValidationError on infeasible sizes or a non-PD covariance.
  void validate() const;
};

enum class Role { population, train, valid };
std::string_view role_name(Role role) noexcept;

struct SimDataset {
  Eigen::MatrixXd X;       ///< n x 5, entries in [-1, 1]
  Eigen::VectorXd y;       ///< Poisson counts
  Eigen::VectorXd lambda;  ///< true means
  Role role = Role::population;
  /// Row indices into the population (identity for the population itself).
  std::vector<std::size_t> rows;

  Eigen::Index size() const noexcept { return y.size(); }
};

struct SimData {
  SimDataset population;
  SimDataset train;
  SimDataset valid;
};

/// Rows generated per RNG shard; fixed so output does not depend on threads.
inline constexpr std::size_t kShardRows = 1 << 16;

/// n i.i.d. rows from N(0, sigma) as L z with sigma = L L'. Throws
/// ValidationError when sigma is not symmetric positive definite.
Eigen::MatrixXd sample_mvn(std::size_t n, const Eigen::MatrixXd& sigma, std::uint64_t seed,
                           unsigned threads = 1);

/// Per-column affine map of [min, max] onto [-1, 1].
Eigen::MatrixXd rescale_to_unit_interval(const Eigen::MatrixXd& X);

std::uint64_t poisson_draw(double lambda, Rng& rng);

/// Population, then disjoint train and validation samples drawn without
/// replacement. Deterministic in config.seed for any thread count.
SimData generate(const SimConfig& config, unsigned threads = 1);

/// CSV with header x1,x2,x3,x4,x5,y,lambda,role.
std::string dataset_csv(const SimDataset& data);

}  // namespace gencal
