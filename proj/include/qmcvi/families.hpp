#pragma once

// Mean-field variational families q(z | lambda).
//
// Parameter layout: blocks in order; inside a block of dimension k the k
// means come first, then the k log-scales rho (sigma = exp(rho)). A
// diag-gaussian coordinate is N(m, sigma^2); a diag-lognormal coordinate is
// exp(N(m, sigma^2)).

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

#include "qmcvi/transforms.hpp"

namespace qmcvi {

// Log-density value; support_violation marks z outside the support (value is -inf).
struct LogDensity {
  double value = 0.0;
  bool support_violation = false;
};

}  // namespace qmcvi

namespace qmcvi::families {

enum class BlockKind { diag_gaussian, diag_lognormal };

std::string_view to_string(BlockKind kind) noexcept;

struct FamilyBlock {
  BlockKind kind = BlockKind::diag_gaussian;
  std::size_t dim = 0;

  bool operator==(const FamilyBlock&) const = default;
};

struct Coordinate {
  BlockKind kind;
  std::size_t mean_index;
  std::size_t log_scale_index;
};

class FamilySpec {
 public:
  // fixed_scale: the log-scales are held fixed; gradient estimators zero their entries.
  explicit FamilySpec(std::vector<FamilyBlock> blocks, bool fixed_scale = false);

  static FamilySpec gaussian(std::size_t dim, bool fixed_scale = false);

  std::span<const FamilyBlock> blocks() const noexcept { return blocks_; }
  std::size_t latent_dim() const noexcept { return coords_.size(); }
  std::size_t param_dim() const noexcept { return 2 * coords_.size(); }
  bool fixed_scale() const noexcept { return fixed_scale_; }

  // Layout of latent coordinate j.
  const Coordinate& coordinate(std::size_t j) const noexcept { return coords_[j]; }
  std::span<const Coordinate> coordinates() const noexcept { return coords_; }

  // Zeroes the log-scale entries when fixed_scale() is set.
  void mask(std::span<double> grad) const noexcept;

  // Transform that samples q(.|lambda) from uniforms (one block per coordinate run).
  transforms::TransformSpec sampler(std::span<const double> lambda) const;

  bool operator==(const FamilySpec& other) const {
    return blocks_ == other.blocks_ && fixed_scale_ == other.fixed_scale_;
  }

 private:
  std::vector<FamilyBlock> blocks_;
  std::vector<Coordinate> coords_;
  bool fixed_scale_;
};

// Unconstrained parameter vector lambda.
class VarParams {
 public:
  VarParams() = default;
  // Throws Error(shape) if values.size() != spec.param_dim().
  VarParams(const FamilySpec& spec, std::vector<double> values);

  // Every mean set to `mean`, every log-scale to `log_scale`.
  static VarParams uniform(const FamilySpec& spec, double mean, double log_scale);

  std::size_t size() const noexcept { return values_.size(); }
  std::span<const double> values() const noexcept { return values_; }
  std::span<double> values() noexcept { return values_; }
  double operator[](std::size_t i) const noexcept { return values_[i]; }
  double& operator[](std::size_t i) noexcept { return values_[i]; }

  bool operator==(const VarParams&) const = default;

 private:
  std::vector<double> values_;
};

LogDensity log_q(const FamilySpec& spec, const VarParams& lambda, std::span<const double> z);

// d/dlambda log q(z | lambda). Writes into out (length param_dim).
void score(const FamilySpec& spec, const VarParams& lambda, std::span<const double> z, std::span<double> out);
std::vector<double> score(const FamilySpec& spec, const VarParams& lambda, std::span<const double> z);

// d/dz log q(z | lambda), used by the sampled-entropy path.
void grad_z_log_q(const FamilySpec& spec, const VarParams& lambda, std::span<const double> z,
                  std::span<double> out);

// z = g_lambda(eps).
void reparam(const FamilySpec& spec, const VarParams& lambda, std::span<const double> eps, std::span<double> z);
std::vector<double> reparam(const FamilySpec& spec, const VarParams& lambda, std::span<const double> eps);

// Adds cotangent^T (dg_lambda(eps)/dlambda) into out.
void reparam_vjp_add(const FamilySpec& spec, const VarParams& lambda, std::span<const double> eps,
                     std::span<const double> cotangent, std::span<double> out);
std::vector<double> reparam_vjp(const FamilySpec& spec, const VarParams& lambda, std::span<const double> eps,
                                std::span<const double> cotangent);

double entropy(const FamilySpec& spec, const VarParams& lambda);
std::vector<double> entropy_grad(const FamilySpec& spec, const VarParams& lambda);

}  // namespace qmcvi::families
