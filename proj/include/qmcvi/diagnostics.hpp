#pragma once

// Measurement harness: gradient variance by resampling, high-precision ELBO,
// log-log rate fits, and the smooth-integrand integration study.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "qmcvi/estimators.hpp"

namespace qmcvi::diagnostics {

struct VarianceReport {
  std::vector<double> lambda;
  std::size_t n_samples = 0;
  std::size_t resamples = 0;
  double trace_of_variance = 0.0;
  std::vector<double> per_coordinate_variance;
  std::vector<double> mean;
  std::size_t non_finite = 0;
};

// Builds the uniform batch for resample r.
using BatchFactory = std::function<lds::UniformBatch(std::size_t r)>;

// Seed of resample r; disjoint from the optimizer's step seeds.
std::uint64_t resample_seed(std::uint64_t seed, std::size_t r) noexcept;

// Draws `resamples` independent batches of size n, estimates the gradient on
// each and returns the unbiased per-coordinate variance. Resamples with a
// non-finite gradient are dropped and counted; more than 1% of them raises
// Error(non_finite). resamples must be >= 2.
VarianceReport grad_variance(const models::Model& model, const families::FamilySpec& spec,
                             const families::VarParams& lambda, estimators::EstimatorKind estimator,
                             lds::SequenceKind sequence, std::size_t n, std::size_t resamples, std::uint64_t seed,
                             const estimators::EstimatorOptions& options = {});

VarianceReport grad_variance(const models::Model& model, const families::FamilySpec& spec,
                             const families::VarParams& lambda, estimators::EstimatorKind estimator,
                             const BatchFactory& batches, std::size_t resamples,
                             const estimators::EstimatorOptions& options = {});

struct RatePoint {
  double n = 0.0;
  double value = 0.0;
};

struct RateFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
};

// Least squares of log(value) on log(n). Needs >= 4 points with positive n and value.
RateFit rate_fit(std::span<const RatePoint> points);

inline constexpr std::size_t kHighPrecisionSamples = 10000;
inline constexpr std::uint64_t kEvaluationSeed = 0x454c424f;  // "ELBO"

// ELBO from kHighPrecisionSamples MC draws with a fixed evaluation seed.
estimators::ElboEstimate elbo_highprec(const models::Model& model, const families::FamilySpec& spec,
                                       const families::VarParams& lambda, std::uint64_t eval_seed = kEvaluationSeed,
                                       std::size_t n = kHighPrecisionSamples);

// prod_j (1 + 0.3 (u_j - 0.5)); integrates to 1 over [0,1]^d.
double smooth_integrand(std::span<const double> u) noexcept;

struct IntegrationPoint {
  lds::SequenceKind kind = lds::SequenceKind::mc;
  std::size_t n = 0;
  std::size_t randomizations = 0;
  double mean_estimate = 0.0;
  double variance = 0.0;  // across randomizations (0 for deterministic QMC)
  double rmse = 0.0;      // around the exact integral 1
};

IntegrationPoint integration_point(lds::SequenceKind kind, std::size_t dim, std::size_t n,
                                   std::size_t randomizations, std::uint64_t seed);

}  // namespace qmcvi::diagnostics
