#include "qmcvi/models.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <string>

#include "qmcvi/error.hpp"
#include "qmcvi/rng.hpp"
#include "qmcvi/transforms.hpp"

namespace qmcvi::models {

namespace {

const double kHalfLog2Pi = 0.5 * std::log(2.0 * std::numbers::pi);
constexpr double kInf = std::numeric_limits<double>::infinity();

double log_normal_pdf(double x, double mean, double sd) {
  const double r = (x - mean) / sd;
  return -kHalfLog2Pi - std::log(sd) - 0.5 * r * r;
}

// LogNormal(0, s) log density at x > 0 and its derivative.
double log_lognormal_pdf(double x, double s) {
  const double lx = std::log(x);
  return -lx - kHalfLog2Pi - std::log(s) - 0.5 * lx * lx / (s * s);
}

double d_log_lognormal_pdf(double x, double s) { return (-1.0 - std::log(x) / (s * s)) / x; }

double standard_normal(SplitMix64& rng) { return transforms::inverse_normal_cdf_unchecked(rng.open_uniform()); }

}  // namespace

std::vector<double> Model::grad_z(std::span<const double> z) const {
  std::vector<double> g(latent_dim());
  if (value_and_grad(z, g).support_violation) {
    throw Error(ErrorCode::support_violation, std::string(name()) + ": gradient requested outside the support");
  }
  return g;
}

std::optional<double> Model::optimality_gap(const families::FamilySpec&, const families::VarParams&) const {
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// ToyGaussian

ToyGaussian::ToyGaussian(std::size_t dim) : dim_(dim) {
  if (dim == 0) throw Error(ErrorCode::shape, "toy model needs d >= 1");
}

LogDensity ToyGaussian::log_joint(std::span<const double> z) const {
  double s = 0.0;
  for (double v : z) s += v * v;
  return {-0.5 * s - static_cast<double>(dim_) * kHalfLog2Pi, false};
}

LogDensity ToyGaussian::value_and_grad(std::span<const double> z, std::span<double> grad) const {
  for (std::size_t j = 0; j < dim_; ++j) grad[j] = -z[j];
  return log_joint(z);
}

families::FamilySpec ToyGaussian::variational_family(bool fixed_scale) const {
  return families::FamilySpec::gaussian(dim_, fixed_scale);
}

std::optional<double> ToyGaussian::optimality_gap(const families::FamilySpec& spec,
                                                  const families::VarParams& lambda) const {
  double kl = 0.0;
  for (const auto& c : spec.coordinates()) {
    if (c.kind != families::BlockKind::diag_gaussian) return std::nullopt;
    const double m = lambda[c.mean_index];
    const double rho = lambda[c.log_scale_index];
    // exp(2 rho) - 1 - 2 rho computed without cancellation near rho = 0.
    kl += 0.5 * (m * m + std::expm1(2.0 * rho) - 2.0 * rho);
  }
  return kl;
}

std::vector<double> ToyGaussian::random_support_point(std::uint64_t seed) const {
  SplitMix64 rng(derive_seed(seed, 0x746f79));
  std::vector<double> z(dim_);
  for (auto& v : z) v = 2.0 * standard_normal(rng);
  return z;
}

// ---------------------------------------------------------------------------
// HierarchicalLinearRegression

HierarchicalLinearRegression::HierarchicalLinearRegression(std::size_t groups, std::size_t covariates,
                                                           std::vector<double> x, std::vector<double> y)
    : groups_(groups), k_(covariates), x_(std::move(x)), y_(std::move(y)) {
  if (groups_ == 0 || k_ == 0) throw Error(ErrorCode::shape, "hierarchical regression needs I >= 1 and k >= 1");
  if (x_.size() != groups_ * k_ || y_.size() != groups_) {
    throw Error(ErrorCode::shape, "hierarchical regression: data sizes do not match I and k");
  }
}

HierarchicalLinearRegression HierarchicalLinearRegression::simulate(std::size_t groups, std::size_t covariates,
                                                                    std::uint64_t seed) {
  SplitMix64 rng(derive_seed(seed, 0x686c72));
  std::vector<double> mu(covariates);
  for (auto& m : mu) m = kMeanPriorSd * standard_normal(rng);
  const double sigma_beta = std::exp(kScalePriorSigma * standard_normal(rng));
  const double noise = std::exp(kScalePriorSigma * standard_normal(rng));
  std::vector<double> x(groups * covariates), y(groups);
  for (std::size_t i = 0; i < groups; ++i) {
    double mean = 0.0;
    for (std::size_t j = 0; j < covariates; ++j) {
      const double b = mu[j] + sigma_beta * standard_normal(rng);
      const double xij = standard_normal(rng);
      x[i * covariates + j] = xij;
      mean += xij * b;
    }
    y[i] = mean + noise * standard_normal(rng);
  }
  return HierarchicalLinearRegression(groups, covariates, std::move(x), std::move(y));
}

LogDensity HierarchicalLinearRegression::log_joint(std::span<const double> z) const {
  std::vector<double> scratch(latent_dim());
  return value_and_grad(z, scratch);
}

LogDensity HierarchicalLinearRegression::value_and_grad(std::span<const double> z, std::span<double> grad) const {
  const std::size_t k = k_;
  const double sigma_beta = z[k];
  const double noise = z[k + 1];
  if (!(sigma_beta > 0.0) || !(noise > 0.0)) return {-kInf, true};

  const auto mu = z.subspan(0, k);
  const auto b = z.subspan(k + 2);
  auto g_mu = grad.subspan(0, k);
  auto g_b = grad.subspan(k + 2);
  const double inv_var_b = 1.0 / (sigma_beta * sigma_beta);
  const double inv_var_y = 1.0 / (noise * noise);
  const double log_sigma_beta = std::log(sigma_beta);
  const double log_noise = std::log(noise);

  double lp = 0.0;
  for (std::size_t j = 0; j < k; ++j) {
    lp += log_normal_pdf(mu[j], 0.0, kMeanPriorSd);
    g_mu[j] = -mu[j] / (kMeanPriorSd * kMeanPriorSd);
  }
  lp += log_lognormal_pdf(sigma_beta, kScalePriorSigma) + log_lognormal_pdf(noise, kScalePriorSigma);
  double g_sigma = d_log_lognormal_pdf(sigma_beta, kScalePriorSigma);
  double g_noise = d_log_lognormal_pdf(noise, kScalePriorSigma);

  double sq_b = 0.0, sq_y = 0.0;
  for (std::size_t i = 0; i < groups_; ++i) {
    const double* xi = x_.data() + i * k;
    double fit = 0.0;
    for (std::size_t j = 0; j < k; ++j) fit += xi[j] * b[i * k + j];
    const double resid = y_[i] - fit;
    sq_y += resid * resid;
    for (std::size_t j = 0; j < k; ++j) {
      const double dev = b[i * k + j] - mu[j];
      sq_b += dev * dev;
      g_mu[j] += dev * inv_var_b;
      g_b[i * k + j] = -dev * inv_var_b + xi[j] * resid * inv_var_y;
    }
  }
  const auto n_b = static_cast<double>(groups_ * k);
  const auto n_y = static_cast<double>(groups_);
  lp += -n_b * (kHalfLog2Pi + log_sigma_beta) - 0.5 * sq_b * inv_var_b;
  lp += -n_y * (kHalfLog2Pi + log_noise) - 0.5 * sq_y * inv_var_y;
  g_sigma += -n_b / sigma_beta + sq_b * inv_var_b / sigma_beta;
  g_noise += -n_y / noise + sq_y * inv_var_y / noise;
  grad[k] = g_sigma;
  grad[k + 1] = g_noise;
  return {lp, false};
}

families::FamilySpec HierarchicalLinearRegression::variational_family(bool fixed_scale) const {
  using families::BlockKind;
  return families::FamilySpec({{BlockKind::diag_gaussian, k_},
                               {BlockKind::diag_lognormal, 2},
                               {BlockKind::diag_gaussian, groups_ * k_}},
                              fixed_scale);
}

std::vector<double> HierarchicalLinearRegression::random_support_point(std::uint64_t seed) const {
  SplitMix64 rng(derive_seed(seed, 0x686c72707473));
  std::vector<double> z(latent_dim());
  for (std::size_t j = 0; j < k_; ++j) z[j] = 2.0 * standard_normal(rng);
  z[k_] = std::exp(0.5 * standard_normal(rng));
  z[k_ + 1] = std::exp(0.5 * standard_normal(rng));
  for (std::size_t j = k_ + 2; j < z.size(); ++j) z[j] = z[(j - k_ - 2) % k_] + z[k_] * standard_normal(rng);
  return z;
}

// ---------------------------------------------------------------------------
// MultilevelPoisson

MultilevelPoisson::MultilevelPoisson(std::size_t ethnicities, std::size_t precincts, std::vector<double> exposures,
                                     std::vector<std::int64_t> counts)
    : e_(ethnicities), p_(precincts), exposures_(std::move(exposures)), counts_(std::move(counts)) {
  if (e_ == 0 || p_ == 0) throw Error(ErrorCode::shape, "Poisson GLM needs E >= 1 and P >= 1");
  if (exposures_.size() != e_ * p_ || counts_.size() != e_ * p_) {
    throw Error(ErrorCode::shape, "Poisson GLM: data sizes do not match E x P");
  }
  log_exposures_.reserve(exposures_.size());
  for (std::size_t c = 0; c < exposures_.size(); ++c) {
    if (!(exposures_[c] > 0.0) || counts_[c] < 0) {
      throw Error(ErrorCode::domain, "Poisson GLM: exposures must be positive and counts non-negative");
    }
    log_exposures_.push_back(std::log(exposures_[c]));
    log_factorial_sum_ += std::lgamma(static_cast<double>(counts_[c]) + 1.0);
  }
}

MultilevelPoisson MultilevelPoisson::simulate(std::size_t ethnicities, std::size_t precincts, std::uint64_t seed) {
  SplitMix64 rng(derive_seed(seed, 0x706f6973));
  std::vector<double> alpha(ethnicities), beta(precincts);
  for (auto& a : alpha) a = kSimSigmaAlpha * standard_normal(rng);
  for (auto& b : beta) b = kSimSigmaBeta * standard_normal(rng);
  std::vector<double> exposures(ethnicities * precincts);
  std::vector<std::int64_t> counts(ethnicities * precincts);
  for (std::size_t e = 0; e < ethnicities; ++e) {
    for (std::size_t p = 0; p < precincts; ++p) {
      const std::size_t c = e * precincts + p;
      exposures[c] = std::round(std::pow(10.0, 2.0 + 2.0 * rng.open_uniform()));
      const double rate = std::exp(kSimMean + alpha[e] + beta[p]) * exposures[c];
      std::poisson_distribution<std::int64_t> draw(rate);
      counts[c] = draw(rng);
    }
  }
  return MultilevelPoisson(ethnicities, precincts, std::move(exposures), std::move(counts));
}

LogDensity MultilevelPoisson::log_joint(std::span<const double> z) const {
  std::vector<double> scratch(latent_dim());
  return value_and_grad(z, scratch);
}

LogDensity MultilevelPoisson::value_and_grad(std::span<const double> z, std::span<double> grad) const {
  const double mu = z[0];
  const double log_var_a = z[1];
  const double log_var_b = z[2];
  const auto alpha = z.subspan(3, e_);
  const auto beta = z.subspan(3 + e_, p_);
  auto g_alpha = grad.subspan(3, e_);
  auto g_beta = grad.subspan(3 + e_, p_);
  const double prior_var = kPriorSd * kPriorSd;
  const double inv_var_a = std::exp(-log_var_a);
  const double inv_var_b = std::exp(-log_var_b);

  double lp = log_normal_pdf(mu, 0.0, kPriorSd) + log_normal_pdf(log_var_a, 0.0, kPriorSd) +
              log_normal_pdf(log_var_b, 0.0, kPriorSd);
  double g_mu = -mu / prior_var;

  double sq_a = 0.0, sq_b = 0.0;
  for (std::size_t e = 0; e < e_; ++e) {
    sq_a += alpha[e] * alpha[e];
    g_alpha[e] = -alpha[e] * inv_var_a;
  }
  for (std::size_t p = 0; p < p_; ++p) {
    sq_b += beta[p] * beta[p];
    g_beta[p] = -beta[p] * inv_var_b;
  }
  const auto n_a = static_cast<double>(e_);
  const auto n_b = static_cast<double>(p_);
  lp += -n_a * kHalfLog2Pi - 0.5 * n_a * log_var_a - 0.5 * sq_a * inv_var_a;
  lp += -n_b * kHalfLog2Pi - 0.5 * n_b * log_var_b - 0.5 * sq_b * inv_var_b;
  grad[1] = -log_var_a / prior_var - 0.5 * n_a + 0.5 * sq_a * inv_var_a;
  grad[2] = -log_var_b / prior_var - 0.5 * n_b + 0.5 * sq_b * inv_var_b;

  double poisson = 0.0;
  for (std::size_t e = 0; e < e_; ++e) {
    for (std::size_t p = 0; p < p_; ++p) {
      const std::size_t c = e * p_ + p;
      const double eta = mu + alpha[e] + beta[p] + log_exposures_[c];
      const double rate = std::exp(eta);
      const auto y = static_cast<double>(counts_[c]);
      poisson += y * eta - rate;
      const double pull = y - rate;
      g_mu += pull;
      g_alpha[e] += pull;
      g_beta[p] += pull;
    }
  }
  lp += poisson - log_factorial_sum_;
  grad[0] = g_mu;
  return {lp, false};
}

families::FamilySpec MultilevelPoisson::variational_family(bool fixed_scale) const {
  return families::FamilySpec::gaussian(latent_dim(), fixed_scale);
}

std::vector<double> MultilevelPoisson::random_support_point(std::uint64_t seed) const {
  SplitMix64 rng(derive_seed(seed, 0x706f6973707473));
  std::vector<double> z(latent_dim());
  z[0] = kSimMean + 0.5 * standard_normal(rng);
  z[1] = 2.0 * std::log(kSimSigmaAlpha) + 0.5 * standard_normal(rng);
  z[2] = 2.0 * std::log(kSimSigmaBeta) + 0.5 * standard_normal(rng);
  for (std::size_t e = 0; e < e_; ++e) z[3 + e] = kSimSigmaAlpha * standard_normal(rng);
  for (std::size_t p = 0; p < p_; ++p) z[3 + e_ + p] = kSimSigmaBeta * standard_normal(rng);
  return z;
}

std::unique_ptr<Model> toy_gaussian(std::size_t dim) { return std::make_unique<ToyGaussian>(dim); }

std::unique_ptr<Model> hierarchical_lr(std::size_t groups, std::size_t covariates, std::uint64_t seed) {
  return std::make_unique<HierarchicalLinearRegression>(
      HierarchicalLinearRegression::simulate(groups, covariates, seed));
}

std::unique_ptr<Model> multilevel_poisson(std::size_t ethnicities, std::size_t precincts, std::uint64_t seed) {
  return std::make_unique<MultilevelPoisson>(MultilevelPoisson::simulate(ethnicities, precincts, seed));
}

}  // namespace qmcvi::models
