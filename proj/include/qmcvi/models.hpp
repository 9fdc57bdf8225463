#pragma once

// Built-in Bayesian models: log p(x, z) with all normalizing constants and
// its analytic z-gradient.

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "qmcvi/families.hpp"

namespace qmcvi::models {

class Model {
 public:
  virtual ~Model() = default;

  virtual std::string_view name() const noexcept = 0;
  virtual std::size_t latent_dim() const noexcept = 0;

  // -inf with support_violation set when z breaks a positivity constraint.
  virtual LogDensity log_joint(std::span<const double> z) const = 0;

  // Writes d/dz log p(x, z) into grad and returns log p(x, z). grad is left
  // unspecified on a support violation.
  virtual LogDensity value_and_grad(std::span<const double> z, std::span<double> grad) const = 0;

  std::vector<double> grad_z(std::span<const double> z) const;

  // Mean-field family whose blocks mirror the prior (lognormal for positive latents).
  virtual families::FamilySpec variational_family(bool fixed_scale = false) const = 0;

  // F(lambda) - F* where F is the negative ELBO, when known in closed form.
  virtual std::optional<double> optimality_gap(const families::FamilySpec& spec,
                                               const families::VarParams& lambda) const;

  // A point inside the support, reproducible from seed (finite-difference checks).
  virtual std::vector<double> random_support_point(std::uint64_t seed) const = 0;
};

// N(0, I_d) target without data.
class ToyGaussian final : public Model {
 public:
  explicit ToyGaussian(std::size_t dim);

  std::string_view name() const noexcept override { return "toy"; }
  std::size_t latent_dim() const noexcept override { return dim_; }
  LogDensity log_joint(std::span<const double> z) const override;
  LogDensity value_and_grad(std::span<const double> z, std::span<double> grad) const override;
  families::FamilySpec variational_family(bool fixed_scale = false) const override;
  // KL(q || N(0, I)) for an all-Gaussian family.
  std::optional<double> optimality_gap(const families::FamilySpec& spec,
                                       const families::VarParams& lambda) const override;
  std::vector<double> random_support_point(std::uint64_t seed) const override;

 private:
  std::size_t dim_;
};

// y_i ~ N(x_i^T b_i, eps), b_i ~ N(mu_beta, sigma_beta), mu_beta ~ N(0, 10^2),
// sigma_beta, eps ~ LogNormal(0, 0.5); scales are standard deviations.
// Latent layout: mu_beta (k), sigma_beta, eps, b_1 .. b_I (k each).
class HierarchicalLinearRegression final : public Model {
 public:
  // x is I x k row-major, y has length I.
  HierarchicalLinearRegression(std::size_t groups, std::size_t covariates, std::vector<double> x,
                               std::vector<double> y);

  // Simulates covariates x_ij ~ N(0,1) and responses from the generative process.
  static HierarchicalLinearRegression simulate(std::size_t groups, std::size_t covariates, std::uint64_t seed);

  std::string_view name() const noexcept override { return "hlr"; }
  std::size_t latent_dim() const noexcept override { return groups_ * k_ + k_ + 2; }
  LogDensity log_joint(std::span<const double> z) const override;
  LogDensity value_and_grad(std::span<const double> z, std::span<double> grad) const override;
  families::FamilySpec variational_family(bool fixed_scale = false) const override;
  std::vector<double> random_support_point(std::uint64_t seed) const override;

  std::size_t groups() const noexcept { return groups_; }
  std::size_t covariates() const noexcept { return k_; }
  std::span<const double> x() const noexcept { return x_; }
  std::span<const double> y() const noexcept { return y_; }

  static constexpr double kMeanPriorSd = 10.0;
  static constexpr double kScalePriorSigma = 0.5;

 private:
  std::size_t groups_;
  std::size_t k_;
  std::vector<double> x_;
  std::vector<double> y_;
};

// Y_ep ~ Poisson(exp(mu + alpha_e + beta_p + log N_ep)), alpha_e ~ N(0, sigma_a^2),
// beta_p ~ N(0, sigma_b^2), mu, log sigma_a^2, log sigma_b^2 ~ N(0, 10^2).
// Latent layout: mu, log sigma_a^2, log sigma_b^2, alpha_1..alpha_E, beta_1..beta_P.
class MultilevelPoisson final : public Model {
 public:
  // exposures and counts are E x P row-major.
  MultilevelPoisson(std::size_t ethnicities, std::size_t precincts, std::vector<double> exposures,
                    std::vector<std::int64_t> counts);

  // Exposures log-uniform on [1e2, 1e4]; effects drawn with mu = kSimMean,
  // sigma_a = kSimSigmaAlpha, sigma_b = kSimSigmaBeta.
  static MultilevelPoisson simulate(std::size_t ethnicities, std::size_t precincts, std::uint64_t seed);

  std::string_view name() const noexcept override { return "poisson"; }
  std::size_t latent_dim() const noexcept override { return 3 + e_ + p_; }
  LogDensity log_joint(std::span<const double> z) const override;
  LogDensity value_and_grad(std::span<const double> z, std::span<double> grad) const override;
  families::FamilySpec variational_family(bool fixed_scale = false) const override;
  std::vector<double> random_support_point(std::uint64_t seed) const override;

  std::size_t ethnicities() const noexcept { return e_; }
  std::size_t precincts() const noexcept { return p_; }
  std::span<const double> exposures() const noexcept { return exposures_; }
  std::span<const std::int64_t> counts() const noexcept { return counts_; }

  static constexpr double kPriorSd = 10.0;
  static constexpr double kSimMean = -1.0;
  static constexpr double kSimSigmaAlpha = 0.5;
  static constexpr double kSimSigmaBeta = 0.8;

 private:
  std::size_t e_;
  std::size_t p_;
  std::vector<double> exposures_;
  std::vector<double> log_exposures_;
  std::vector<std::int64_t> counts_;
  double log_factorial_sum_ = 0.0;
};

std::unique_ptr<Model> toy_gaussian(std::size_t dim);
std::unique_ptr<Model> hierarchical_lr(std::size_t groups, std::size_t covariates, std::uint64_t seed);
std::unique_ptr<Model> multilevel_poisson(std::size_t ethnicities, std::size_t precincts, std::uint64_t seed);

}  // namespace qmcvi::models
