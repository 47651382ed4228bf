#include "gencal/datagen.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "gencal/csv.hpp"
#include "gencal/error.hpp"
#include "gencal/parallel.hpp"

namespace gencal {

namespace {
constexpr std::uint64_t kStreamCovariates = 1;
constexpr std::uint64_t kStreamOutcomes = 2;
constexpr std::uint64_t kStreamSampling = 3;

std::size_t shard_count(std::size_t n) { return (n + kShardRows - 1) / kShardRows; }
}  // namespace

Eigen::VectorXd SimConfig::default_beta() {
  Eigen::VectorXd b(6);
  b << -2.3, 1.5, 2.0, -1.0, -2.0, -1.5;
  return b;
}

Eigen::MatrixXd SimConfig::default_sigma() {
  Eigen::MatrixXd s(5, 5);
  s << 1.000, 0.025, 0.000, 0.050, 0.000,
       0.025, 1.000, 0.000, 0.075, 0.025,
       0.000, 0.000, 1.000, 0.000, 0.000,
       0.050, 0.075, 0.000, 1.000, 0.000,
       0.000, 0.025, 0.000, 0.000, 1.000;
  return s;
}

void SimConfig::validate() const {
  if (beta.size() != 6) throw ValidationError("simulation: beta must have 6 entries");
  if (sigma.rows() != 5 || sigma.cols() != 5) {
    throw ValidationError("simulation: sigma must be 5 x 5");
  }
  if (n_train == 0 || n_valid == 0) throw ValidationError("simulation: empty sample size");
  if (n_train + n_valid > n_population) {
    throw ValidationError("simulation: n_train + n_valid = " +
                          std::to_string(n_train + n_valid) + " exceeds n_population = " +
                          std::to_string(n_population));
  }
  if (n_population < 2) throw ValidationError("simulation: population too small to rescale");
  if (!sigma.isApprox(sigma.transpose(), 0.0) ||
      sigma.llt().info() != Eigen::Success) {
    throw ValidationError("simulation: sigma is not symmetric positive definite");
  }
}

std::string_view role_name(Role role) noexcept {
  switch (role) {
    case Role::population: return "population";
    case Role::train: return "train";
    case Role::valid: return "valid";
  }
  return "?";
}

Eigen::MatrixXd sample_mvn(std::size_t n, const Eigen::MatrixXd& sigma, std::uint64_t seed,
                           unsigned threads) {
  if (sigma.rows() != sigma.cols()) throw ValidationError("sample_mvn: sigma is not square");
  Eigen::LLT<Eigen::MatrixXd> llt(sigma);
  if (llt.info() != Eigen::Success || !sigma.isApprox(sigma.transpose(), 0.0)) {
    throw ValidationError("sample_mvn: sigma is not symmetric positive definite");
  }
  const Eigen::MatrixXd L = llt.matrixL();
  const Eigen::Index p = sigma.rows();
  Eigen::MatrixXd X(static_cast<Eigen::Index>(n), p);
  parallel_for(shard_count(n), threads, [&](std::size_t shard) {
    Rng rng(derive_seed(seed, kStreamCovariates, shard));
    const std::size_t begin = shard * kShardRows;
    const std::size_t end = std::min(n, begin + kShardRows);
    Eigen::VectorXd z(p);
    for (std::size_t i = begin; i < end; ++i) {
      for (Eigen::Index j = 0; j < p; ++j) z[j] = rng.normal();
      X.row(static_cast<Eigen::Index>(i)) = (L * z).transpose();
    }
  });
  return X;
}

Eigen::MatrixXd rescale_to_unit_interval(const Eigen::MatrixXd& X) {
  Eigen::MatrixXd out(X.rows(), X.cols());
  for (Eigen::Index j = 0; j < X.cols(); ++j) {
    if (X.rows() == 0) break;
    const double lo = X.col(j).minCoeff();
    const double hi = X.col(j).maxCoeff();
    if (!(lo < hi)) {
      throw ValidationError("rescale: column " + std::to_string(j + 1) + " is constant");
    }
    const double scale = 2.0 / (hi - lo);
    for (Eigen::Index i = 0; i < X.rows(); ++i) {
      const double v = X(i, j);
      // Pin the extremes so they land exactly on the interval ends.
      out(i, j) = v == lo ? -1.0 : v == hi ? 1.0 : std::clamp((v - lo) * scale - 1.0, -1.0, 1.0);
    }
  }
  return out;
}

std::uint64_t poisson_draw(double lambda, Rng& rng) { return rng.poisson(lambda); }

namespace {

SimDataset subset(const SimDataset& pop, std::vector<std::size_t> rows, Role role) {
  SimDataset d;
  const auto m = static_cast<Eigen::Index>(rows.size());
  d.X.resize(m, pop.X.cols());
  d.y.resize(m);
  d.lambda.resize(m);
  for (Eigen::Index i = 0; i < m; ++i) {
    const auto r = static_cast<Eigen::Index>(rows[i]);
    d.X.row(i) = pop.X.row(r);
    d.y[i] = pop.y[r];
    d.lambda[i] = pop.lambda[r];
  }
  d.role = role;
  d.rows = std::move(rows);
  return d;
}

}  // namespace

SimData generate(const SimConfig& config, unsigned threads) {
  config.validate();
  const std::size_t n = config.n_population;
  SimData out;
  SimDataset& pop = out.population;
  pop.role = Role::population;
  pop.X = rescale_to_unit_interval(sample_mvn(n, config.sigma, config.seed, threads));
  pop.lambda = ((pop.X * config.beta.tail(5)).array() + config.beta[0]).exp();
  pop.y.resize(static_cast<Eigen::Index>(n));
  parallel_for(shard_count(n), threads, [&](std::size_t shard) {
    Rng rng(derive_seed(config.seed, kStreamOutcomes, shard));
    const std::size_t begin = shard * kShardRows;
    const std::size_t end = std::min(n, begin + kShardRows);
    for (std::size_t i = begin; i < end; ++i) {
      const auto r = static_cast<Eigen::Index>(i);
      pop.y[r] = static_cast<double>(poisson_draw(pop.lambda[r], rng));
    }
  });
  pop.rows.resize(n);
  std::iota(pop.rows.begin(), pop.rows.end(), std::size_t{0});

  // Partial Fisher-Yates: the first n_train + n_valid slots are a uniform
  // sample without replacement.
  std::vector<std::uint32_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0u);
  Rng rng(derive_seed(config.seed, kStreamSampling));
  const std::size_t m = config.n_train + config.n_valid;
  for (std::size_t i = 0; i < m; ++i) {
    const std::size_t j = i + rng.below(n - i);
    std::swap(idx[i], idx[j]);
  }
  out.train = subset(pop, {idx.begin(), idx.begin() + config.n_train}, Role::train);
  out.valid = subset(pop, {idx.begin() + config.n_train, idx.begin() + m}, Role::valid);
  return out;
}

std::string dataset_csv(const SimDataset& data) {
  std::string out = "x1,x2,x3,x4,x5,y,lambda,role\n";
  out.reserve(static_cast<std::size_t>(data.size()) * 140);
  const std::string_view role = role_name(data.role);
  for (Eigen::Index i = 0; i < data.size(); ++i) {
    for (Eigen::Index j = 0; j < data.X.cols(); ++j) {
      out += format_double(data.X(i, j));
      out += ',';
    }
    out += format_double(data.y[i]);
    out += ',';
    out += format_double(data.lambda[i]);
    out += ',';
    out += role;
    out += '\n';
  }
  return out;
}

}  // namespace gencal
