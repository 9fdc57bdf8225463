#pragma once

// ELBO and gradient estimators over a batch of uniforms:
//   g_N(lambda) = (1/N) sum_i g_{Gamma(u_i)}(lambda)
// with eps_i = Phi^-1(u_i) and z_i = g_lambda(eps_i). Sample i is row i of
// the batch; the batch dimension equals the latent dimension.
//
// Gradients are reported in ascent orientation (d ELBO / d lambda).

#include <cstddef>
#include <optional>
#include <string_view>
#include <vector>

#include "qmcvi/exec.hpp"
#include "qmcvi/families.hpp"
#include "qmcvi/lds.hpp"
#include "qmcvi/models.hpp"

namespace qmcvi::estimators {

enum class EstimatorKind { score, reparam };

std::string_view to_string(EstimatorKind kind) noexcept;
EstimatorKind parse_estimator_kind(std::string_view name);

// analytic: closed-form entropy gradient. sampled: the per-sample path term
// -d/dlambda log q(g_lambda(eps) | lambda).
enum class EntropyMode { analytic, sampled };

struct EstimatorOptions {
  EntropyMode entropy = EntropyMode::analytic;
  ExecPolicy exec = ExecPolicy::parallel;
};

struct GradEstimate {
  std::vector<double> grad;
  double elbo_estimate = 0.0;
  std::size_t n_samples = 0;
  EstimatorKind estimator = EstimatorKind::reparam;
  std::optional<lds::SequenceSource> sequence;
  bool support_violation = false;
};

struct ElboEstimate {
  double value = 0.0;
  double std_error = 0.0;
  std::size_t n_samples = 0;
  bool support_violation = false;
};

// (1/N) sum_i [log p(x, z_i) - log q(z_i | lambda)].
ElboEstimate elbo(const models::Model& model, const families::FamilySpec& spec,
                  const families::VarParams& lambda, const lds::UniformBatch& batch,
                  const EstimatorOptions& options = {});

// Score-function estimator: (1/N) sum_i score(z_i) [log p(x, z_i) - log q(z_i)].
GradEstimate grad_score(const models::Model& model, const families::FamilySpec& spec,
                        const families::VarParams& lambda, const lds::UniformBatch& batch,
                        const EstimatorOptions& options = {});

// Reparameterization estimator: (1/N) sum_i vjp(eps_i, grad_z log p(x, z_i)) + entropy term.
GradEstimate grad_reparam(const models::Model& model, const families::FamilySpec& spec,
                          const families::VarParams& lambda, const lds::UniformBatch& batch,
                          const EstimatorOptions& options = {});

GradEstimate estimate_gradient(EstimatorKind kind, const models::Model& model, const families::FamilySpec& spec,
                               const families::VarParams& lambda, const lds::UniformBatch& batch,
                               const EstimatorOptions& options = {});

}  // namespace qmcvi::estimators
