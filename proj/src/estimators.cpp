#include "qmcvi/estimators.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "qmcvi/error.hpp"
#include "qmcvi/transforms.hpp"

namespace qmcvi::estimators {

namespace {

void check_shapes(const models::Model& model, const families::FamilySpec& spec, const families::VarParams& lambda,
                  const lds::UniformBatch& batch) {
  const std::size_t d = model.latent_dim();
  if (spec.latent_dim() != d || lambda.size() != spec.param_dim() || batch.dim() != d) {
    throw Error(ErrorCode::shape, "estimator: model d_z = " + std::to_string(d) + ", family d_z = " +
                                      std::to_string(spec.latent_dim()) + ", lambda size = " +
                                      std::to_string(lambda.size()) + ", batch d = " + std::to_string(batch.dim()));
  }
}

// Per-chunk buffers for one sample at a time.
struct Scratch {
  explicit Scratch(std::size_t d, std::size_t p) : eps(d), z(d), gz(d), gq(d), score(p) {}
  std::vector<double> eps, z, gz, gq, score;
};

void draw_sample(const families::FamilySpec& spec, const families::VarParams& lambda, std::span<const double> u,
                 Scratch& s) {
  for (std::size_t j = 0; j < u.size(); ++j) s.eps[j] = transforms::inverse_normal_cdf_unchecked(u[j]);
  families::reparam(spec, lambda, s.eps, s.z);
}

// Accumulator tail: sum f, sum f^2, support violations.
struct Tail {
  static constexpr std::size_t kWidth = 3;
};

void finish_elbo(std::span<const double> tail, std::size_t n, double& value, double& se, bool& violation) {
  violation = tail[2] > 0.0;
  if (violation) {
    value = -std::numeric_limits<double>::infinity();
    se = std::numeric_limits<double>::quiet_NaN();
    return;
  }
  const auto nn = static_cast<double>(n);
  value = tail[0] / nn;
  if (n > 1) {
    const double var = std::max(0.0, (tail[1] - nn * value * value) / (nn - 1.0));
    se = std::sqrt(var / nn);
  } else {
    se = std::numeric_limits<double>::quiet_NaN();
  }
}

GradEstimate make_estimate(EstimatorKind kind, const families::FamilySpec& spec, const lds::UniformBatch& batch,
                           std::vector<double> acc) {
  const std::size_t p = spec.param_dim();
  const std::size_t n = batch.size();
  GradEstimate out;
  out.estimator = kind;
  out.n_samples = n;
  out.sequence = batch.origin();
  double se = 0.0;
  finish_elbo(std::span<const double>(acc).subspan(p), n, out.elbo_estimate, se, out.support_violation);
  acc.resize(p);
  const double inv_n = 1.0 / static_cast<double>(n);
  for (auto& g : acc) g *= inv_n;
  out.grad = std::move(acc);
  return out;
}

}  // namespace

std::string_view to_string(EstimatorKind kind) noexcept { return kind == EstimatorKind::score ? "score" : "reparam"; }

EstimatorKind parse_estimator_kind(std::string_view name) {
  if (name == "score") return EstimatorKind::score;
  if (name == "reparam") return EstimatorKind::reparam;
  throw Error(ErrorCode::invalid_config, "unknown estimator '" + std::string(name) + "'");
}

ElboEstimate elbo(const models::Model& model, const families::FamilySpec& spec, const families::VarParams& lambda,
                  const lds::UniformBatch& batch, const EstimatorOptions& options) {
  check_shapes(model, spec, lambda, batch);
  const std::size_t d = spec.latent_dim();
  auto acc = kernels::chunked_sum(batch.size(), Tail::kWidth, options.exec,
                                  [&](std::size_t begin, std::size_t end, std::span<double> tail) {
                                    Scratch s(d, 0);
                                    for (std::size_t i = begin; i < end; ++i) {
                                      draw_sample(spec, lambda, batch.row(i), s);
                                      const LogDensity lp = model.log_joint(s.z);
                                      const LogDensity lq = families::log_q(spec, lambda, s.z);
                                      if (lp.support_violation || lq.support_violation) {
                                        tail[2] += 1.0;
                                        continue;
                                      }
                                      const double f = lp.value - lq.value;
                                      tail[0] += f;
                                      tail[1] += f * f;
                                    }
                                  });
  ElboEstimate out;
  out.n_samples = batch.size();
  finish_elbo(acc, batch.size(), out.value, out.std_error, out.support_violation);
  return out;
}

GradEstimate grad_score(const models::Model& model, const families::FamilySpec& spec,
                        const families::VarParams& lambda, const lds::UniformBatch& batch,
                        const EstimatorOptions& options) {
  check_shapes(model, spec, lambda, batch);
  const std::size_t d = spec.latent_dim();
  const std::size_t p = spec.param_dim();
  auto acc = kernels::chunked_sum(batch.size(), p + Tail::kWidth, options.exec,
                                  [&](std::size_t begin, std::size_t end, std::span<double> sum) {
                                    Scratch s(d, p);
                                    for (std::size_t i = begin; i < end; ++i) {
                                      draw_sample(spec, lambda, batch.row(i), s);
                                      const LogDensity lp = model.log_joint(s.z);
                                      const LogDensity lq = families::log_q(spec, lambda, s.z);
                                      if (lp.support_violation || lq.support_violation) {
                                        sum[p + 2] += 1.0;
                                        continue;
                                      }
                                      const double f = lp.value - lq.value;
                                      families::score(spec, lambda, s.z, s.score);
                                      for (std::size_t k = 0; k < p; ++k) sum[k] += s.score[k] * f;
                                      sum[p] += f;
                                      sum[p + 1] += f * f;
                                    }
                                  });
  GradEstimate out = make_estimate(EstimatorKind::score, spec, batch, std::move(acc));
  spec.mask(out.grad);
  return out;
}

GradEstimate grad_reparam(const models::Model& model, const families::FamilySpec& spec,
                          const families::VarParams& lambda, const lds::UniformBatch& batch,
                          const EstimatorOptions& options) {
  check_shapes(model, spec, lambda, batch);
  const std::size_t d = spec.latent_dim();
  const std::size_t p = spec.param_dim();
  const bool sampled_entropy = options.entropy == EntropyMode::sampled;
  auto acc = kernels::chunked_sum(batch.size(), p + Tail::kWidth, options.exec,
                                  [&](std::size_t begin, std::size_t end, std::span<double> sum) {
                                    Scratch s(d, p);
                                    for (std::size_t i = begin; i < end; ++i) {
                                      draw_sample(spec, lambda, batch.row(i), s);
                                      const LogDensity lp = model.value_and_grad(s.z, s.gz);
                                      const LogDensity lq = families::log_q(spec, lambda, s.z);
                                      if (lp.support_violation || lq.support_violation) {
                                        sum[p + 2] += 1.0;
                                        continue;
                                      }
                                      if (sampled_entropy) {
                                        // -(d/dlambda) log q(g(eps)|lambda): path part plus score part.
                                        families::grad_z_log_q(spec, lambda, s.z, s.gq);
                                        for (std::size_t j = 0; j < d; ++j) s.gz[j] -= s.gq[j];
                                        families::score(spec, lambda, s.z, s.score);
                                        for (std::size_t k = 0; k < p; ++k) sum[k] -= s.score[k];
                                      }
                                      families::reparam_vjp_add(spec, lambda, s.eps, s.gz, sum.first(p));
                                      const double f = lp.value - lq.value;
                                      sum[p] += f;
                                      sum[p + 1] += f * f;
                                    }
                                  });
  GradEstimate out = make_estimate(EstimatorKind::reparam, spec, batch, std::move(acc));
  if (!sampled_entropy) {
    const auto h = families::entropy_grad(spec, lambda);
    for (std::size_t k = 0; k < p; ++k) out.grad[k] += h[k];
  }
  spec.mask(out.grad);
  return out;
}

GradEstimate estimate_gradient(EstimatorKind kind, const models::Model& model, const families::FamilySpec& spec,
                               const families::VarParams& lambda, const lds::UniformBatch& batch,
                               const EstimatorOptions& options) {
  return kind == EstimatorKind::score ? grad_score(model, spec, lambda, batch, options)
                                      : grad_reparam(model, spec, lambda, batch, options);
}

}  // namespace qmcvi::estimators
