#include "qmcvi/diagnostics.hpp"

#include <cmath>
#include <string>

#include "qmcvi/error.hpp"
#include "qmcvi/rng.hpp"

namespace qmcvi::diagnostics {

namespace {

constexpr std::uint64_t kVarianceSalt = 0x56415249;     // "VARI"
constexpr std::uint64_t kIntegrationSalt = 0x494e5447;  // "INTG"

}  // namespace

std::uint64_t resample_seed(std::uint64_t seed, std::size_t r) noexcept {
  return derive_seed(seed, kVarianceSalt, r);
}

VarianceReport grad_variance(const models::Model& model, const families::FamilySpec& spec,
                             const families::VarParams& lambda, estimators::EstimatorKind estimator,
                             lds::SequenceKind sequence, std::size_t n, std::size_t resamples, std::uint64_t seed,
                             const estimators::EstimatorOptions& options) {
  const std::size_t d = model.latent_dim();
  const ExecPolicy exec = options.exec;
  VarianceReport report = grad_variance(
      model, spec, lambda, estimator,
      [&](std::size_t r) {
        return lds::generate(lds::SequenceSource{sequence, d, resample_seed(seed, r), 0}, n,
                             lds::DirectionTable::bundled(), exec);
      },
      resamples, options);
  return report;
}

VarianceReport grad_variance(const models::Model& model, const families::FamilySpec& spec,
                             const families::VarParams& lambda, estimators::EstimatorKind estimator,
                             const BatchFactory& batches, std::size_t resamples,
                             const estimators::EstimatorOptions& options) {
  if (resamples < 2) throw Error(ErrorCode::invalid_config, "grad_variance needs at least two resamples");
  const std::size_t p = spec.param_dim();
  std::vector<double> grads(resamples * p);
  std::vector<char> finite(resamples, 1);
  std::vector<std::size_t> sizes(resamples, 0);

  kernels::for_each_index(resamples, options.exec, [&](std::size_t r) {
    const auto batch = batches(r);
    const auto est = estimators::estimate_gradient(estimator, model, spec, lambda, batch, options);
    sizes[r] = est.n_samples;
    for (std::size_t k = 0; k < p; ++k) {
      grads[r * p + k] = est.grad[k];
      if (!std::isfinite(est.grad[k])) finite[r] = 0;
    }
  });

  VarianceReport report;
  report.lambda.assign(lambda.values().begin(), lambda.values().end());
  report.n_samples = sizes.front();
  report.resamples = resamples;
  std::vector<std::size_t> rows;
  for (std::size_t r = 0; r < resamples; ++r) {
    if (finite[r]) rows.push_back(r);
  }
  report.non_finite = resamples - rows.size();
  if (report.non_finite * 100 > resamples) {
    throw Error(ErrorCode::non_finite, "grad_variance: " + std::to_string(report.non_finite) + " of " +
                                           std::to_string(resamples) + " gradients were non-finite");
  }
  if (rows.size() < 2) throw Error(ErrorCode::non_finite, "grad_variance: fewer than two finite gradients");

  const auto m = static_cast<double>(rows.size());
  report.mean.assign(p, 0.0);
  report.per_coordinate_variance.assign(p, 0.0);
  std::vector<double> column(rows.size());
  for (std::size_t k = 0; k < p; ++k) {
    for (std::size_t i = 0; i < rows.size(); ++i) column[i] = grads[rows[i] * p + k];
    const double mean = kernels::pairwise_sum(column) / m;
    for (auto& v : column) v = (v - mean) * (v - mean);
    report.mean[k] = mean;
    report.per_coordinate_variance[k] = kernels::pairwise_sum(column) / (m - 1.0);
  }
  report.trace_of_variance = kernels::pairwise_sum(report.per_coordinate_variance);
  return report;
}

RateFit rate_fit(std::span<const RatePoint> points) {
  if (points.size() < 4) throw Error(ErrorCode::domain, "rate_fit needs at least four points");
  double sx = 0.0, sy = 0.0;
  for (const auto& pt : points) {
    if (!(pt.n > 0.0) || !(pt.value > 0.0)) throw Error(ErrorCode::domain, "rate_fit: values must be positive");
    sx += std::log(pt.n);
    sy += std::log(pt.value);
  }
  const auto m = static_cast<double>(points.size());
  const double mx = sx / m, my = sy / m;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (const auto& pt : points) {
    const double dx = std::log(pt.n) - mx, dy = std::log(pt.value) - my;
    sxx += dx * dx;
    sxy += dx * dy;
    syy += dy * dy;
  }
  if (!(sxx > 0.0)) throw Error(ErrorCode::domain, "rate_fit: all sample sizes are equal");
  RateFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  fit.r_squared = syy > 0.0 ? (sxy * sxy) / (sxx * syy) : 1.0;
  return fit;
}

estimators::ElboEstimate elbo_highprec(const models::Model& model, const families::FamilySpec& spec,
                                       const families::VarParams& lambda, std::uint64_t eval_seed, std::size_t n) {
  const lds::SequenceSource source{lds::SequenceKind::mc, model.latent_dim(), eval_seed, 0};
  return estimators::elbo(model, spec, lambda, lds::generate(source, n));
}

double smooth_integrand(std::span<const double> u) noexcept {
  double v = 1.0;
  for (double x : u) v *= 1.0 + 0.3 * (x - 0.5);
  return v;
}

IntegrationPoint integration_point(lds::SequenceKind kind, std::size_t dim, std::size_t n,
                                   std::size_t randomizations, std::uint64_t seed) {
  const std::size_t reps = kind == lds::SequenceKind::qmc_sobol ? 1 : randomizations;
  if (reps == 0) throw Error(ErrorCode::invalid_config, "integration study needs at least one randomization");
  std::vector<double> estimates(reps);
  kernels::for_each_index(reps, ExecPolicy::parallel, [&](std::size_t r) {
    const lds::SequenceSource source{kind, dim, derive_seed(seed, kIntegrationSalt, r), 0};
    const auto batch = lds::generate(source, n, lds::DirectionTable::bundled(), ExecPolicy::reference);
    std::vector<double> values(n);
    for (std::size_t i = 0; i < n; ++i) values[i] = smooth_integrand(batch.row(i));
    estimates[r] = kernels::pairwise_sum(values) / static_cast<double>(n);
  });
  IntegrationPoint out;
  out.kind = kind;
  out.n = n;
  out.randomizations = reps;
  const auto m = static_cast<double>(reps);
  out.mean_estimate = kernels::pairwise_sum(estimates) / m;
  std::vector<double> sq_dev(reps), sq_err(reps);
  for (std::size_t r = 0; r < reps; ++r) {
    sq_dev[r] = (estimates[r] - out.mean_estimate) * (estimates[r] - out.mean_estimate);
    sq_err[r] = (estimates[r] - 1.0) * (estimates[r] - 1.0);
  }
  out.variance = reps > 1 ? kernels::pairwise_sum(sq_dev) / (m - 1.0) : 0.0;
  out.rmse = std::sqrt(kernels::pairwise_sum(sq_err) / m);
  return out;
}

}  // namespace qmcvi::diagnostics
