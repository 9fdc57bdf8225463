#include "qmcvi/optim.hpp"

#include <chrono>
#include <cmath>
#include <limits>

#include "qmcvi/error.hpp"
#include "qmcvi/rng.hpp"

namespace qmcvi::optim {

namespace {

constexpr std::uint64_t kStepSalt = 0x53544550;  // "STEP"
constexpr double kMaxSamples = 4294967296.0;

std::string low_start_warning(const SampleSchedule& schedule, std::size_t dim) {
  if (schedule.kind() != SampleSchedule::Kind::geometric) return {};
  const auto& table = lds::DirectionTable::bundled();
  unsigned s = 0;
  for (std::size_t j = 1; j <= std::min(dim, table.max_dim()); ++j) s = std::max(s, table.entry(j).degree);
  const std::size_t exponent = s + dim;
  if (exponent < 63 && schedule.n_min() >= (std::size_t{1} << exponent)) return {};
  return "geometric schedule: N_min = " + std::to_string(schedule.n_min()) + " is below 2^(s+d) = 2^" +
         std::to_string(exponent) + " assumed by the increasing-sample convergence bound";
}

}  // namespace

std::string_view to_string(Algorithm a) noexcept { return a == Algorithm::sgd ? "sgd" : "adam"; }

Algorithm parse_algorithm(std::string_view name) {
  if (name == "sgd") return Algorithm::sgd;
  if (name == "adam") return Algorithm::adam;
  throw Error(ErrorCode::invalid_config, "unknown optimizer '" + std::string(name) + "'");
}

void OptimConfig::validate() const {
  if (!(step_size > 0.0) || !std::isfinite(step_size)) {
    throw Error(ErrorCode::invalid_config, "step size must be positive");
  }
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) {
    throw Error(ErrorCode::invalid_config, "Adam betas must lie in [0, 1)");
  }
  if (!(epsilon > 0.0)) throw Error(ErrorCode::invalid_config, "Adam epsilon must be positive");
  if (max_iters == 0) throw Error(ErrorCode::invalid_config, "max_iters must be positive");
  if (!(stop_tol >= 0.0)) throw Error(ErrorCode::invalid_config, "stop tolerance must be non-negative");
}

SampleSchedule SampleSchedule::fixed(std::size_t n) {
  if (n == 0) throw Error(ErrorCode::invalid_config, "fixed schedule needs N >= 1");
  return SampleSchedule(Kind::fixed, n, 1.0);
}

SampleSchedule SampleSchedule::geometric(std::size_t n_min, double tau) {
  if (n_min == 0) throw Error(ErrorCode::invalid_config, "geometric schedule needs N_min >= 1");
  if (!(tau > 1.0) || !std::isfinite(tau)) throw Error(ErrorCode::invalid_config, "geometric schedule needs tau > 1");
  return SampleSchedule(Kind::geometric, n_min, tau);
}

SampleSchedule SampleSchedule::geometric_reaching(std::size_t n_min, std::size_t n_final, std::size_t iters) {
  if (iters < 2) throw Error(ErrorCode::invalid_config, "geometric schedule needs at least two iterations");
  if (n_final <= n_min + 1) throw Error(ErrorCode::invalid_config, "final sample size must exceed N_min + 1");
  const double tau = std::pow(static_cast<double>(n_final - n_min), 1.0 / static_cast<double>(iters - 1));
  return geometric(n_min, tau);
}

std::size_t SampleSchedule::at(std::size_t t) const {
  if (kind_ == Kind::fixed) return n_;
  const double growth = std::ceil(std::pow(tau_, static_cast<double>(t)));
  if (!(growth + static_cast<double>(n_) < kMaxSamples)) {
    throw Error(ErrorCode::cost_guard, "geometric schedule exceeds 2^32 samples at t = " + std::to_string(t));
  }
  return n_ + static_cast<std::size_t>(growth);
}

void adam_step(AdamState& state, std::span<double> lambda, std::span<const double> grad, double alpha, double beta1,
               double beta2, double epsilon) {
  if (state.first_moment.size() != lambda.size() || grad.size() != lambda.size()) {
    throw Error(ErrorCode::shape, "adam_step: state, parameter and gradient sizes differ");
  }
  ++state.steps;
  const double t = static_cast<double>(state.steps);
  const double c1 = 1.0 - std::pow(beta1, t);
  const double c2 = 1.0 - std::pow(beta2, t);
  for (std::size_t k = 0; k < lambda.size(); ++k) {
    state.first_moment[k] = beta1 * state.first_moment[k] + (1.0 - beta1) * grad[k];
    state.second_moment[k] = beta2 * state.second_moment[k] + (1.0 - beta2) * grad[k] * grad[k];
    const double m_hat = state.first_moment[k] / c1;
    const double v_hat = state.second_moment[k] / c2;
    lambda[k] += alpha * m_hat / (std::sqrt(v_hat) + epsilon);
  }
}

void sgd_step(std::span<double> lambda, std::span<const double> grad, double alpha) {
  for (std::size_t k = 0; k < lambda.size(); ++k) lambda[k] += alpha * grad[k];
}

std::uint64_t step_seed(std::uint64_t master_seed, std::size_t t) noexcept {
  return derive_seed(master_seed, kStepSalt, t);
}

RunResult run(const models::Model& model, const families::FamilySpec& spec, families::VarParams initial,
              estimators::EstimatorKind estimator, lds::SequenceKind sequence, const OptimConfig& config,
              const SampleSchedule& schedule, const RunOptions& options) {
  config.validate();
  if (spec.latent_dim() != model.latent_dim() || initial.size() != spec.param_dim()) {
    throw Error(ErrorCode::shape, "run: family or initial parameters do not match the model");
  }
  using Clock = std::chrono::steady_clock;

  RunResult result;
  result.final_params = std::move(initial);
  if (auto w = low_start_warning(schedule, model.latent_dim()); !w.empty()) result.warnings.push_back(w);

  families::VarParams& lambda = result.final_params;
  AdamState adam(lambda.size());
  double previous_elbo = std::numeric_limits<double>::quiet_NaN();

  for (std::size_t t = 0; t < config.max_iters; ++t) {
    const auto start = Clock::now();
    TraceRecord rec;
    rec.t = t;
    rec.n_samples = schedule.at(t);
    if (options.snapshot_every != 0 && t % options.snapshot_every == 0) {
      rec.snapshot = std::vector<double>(lambda.values().begin(), lambda.values().end());
    }
    if (options.probe) rec.trace_variance = options.probe(t, lambda);

    const lds::SequenceSource source{sequence, model.latent_dim(), step_seed(options.master_seed, t), 0};
    const auto batch = lds::generate(source, rec.n_samples, lds::DirectionTable::bundled(), options.estimator.exec);
    const auto est = estimators::estimate_gradient(estimator, model, spec, lambda, batch, options.estimator);

    rec.elbo = est.elbo_estimate;
    double sq = 0.0;
    for (double g : est.grad) sq += g * g;
    rec.grad_norm = std::sqrt(sq);

    if (est.support_violation) {
      result.aborted = true;
      result.diagnostic = "support violation at t = " + std::to_string(t);
    } else if (!std::isfinite(rec.grad_norm)) {
      result.aborted = true;
      result.diagnostic = "non-finite gradient at t = " + std::to_string(t);
    } else if (config.algorithm == Algorithm::sgd) {
      sgd_step(lambda.values(), est.grad, config.step_size);
    } else {
      adam_step(adam, lambda.values(), est.grad, config.step_size, config.beta1, config.beta2, config.epsilon);
    }
    result.total_samples += rec.n_samples;
    rec.wall_ns = std::chrono::duration_cast<std::chrono::nanoseconds>(Clock::now() - start).count();
    result.trace.push_back(std::move(rec));
    if (result.aborted) break;

    if (config.stop_tol > 0.0 && t > 0 && std::abs(est.elbo_estimate - previous_elbo) <= config.stop_tol) break;
    previous_elbo = est.elbo_estimate;
  }
  return result;
}

}  // namespace qmcvi::optim
