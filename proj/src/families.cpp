#include "qmcvi/families.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "qmcvi/error.hpp"

namespace qmcvi::families {

namespace {

const double kHalfLog2Pi = 0.5 * std::log(2.0 * std::numbers::pi);
const double kHalfLog2PiE = 0.5 * std::log(2.0 * std::numbers::pi * std::numbers::e);

}  // namespace

std::string_view to_string(BlockKind kind) noexcept {
  return kind == BlockKind::diag_gaussian ? "diag-gaussian" : "diag-lognormal";
}

FamilySpec::FamilySpec(std::vector<FamilyBlock> blocks, bool fixed_scale)
    : blocks_(std::move(blocks)), fixed_scale_(fixed_scale) {
  std::size_t offset = 0;
  for (const auto& b : blocks_) {
    if (b.dim == 0) throw Error(ErrorCode::shape, "family block with zero dimension");
    for (std::size_t j = 0; j < b.dim; ++j) {
      coords_.push_back(Coordinate{b.kind, 2 * offset + j, 2 * offset + b.dim + j});
    }
    offset += b.dim;
  }
  if (coords_.empty()) throw Error(ErrorCode::shape, "family spec has no blocks");
}

FamilySpec FamilySpec::gaussian(std::size_t dim, bool fixed_scale) {
  return FamilySpec({FamilyBlock{BlockKind::diag_gaussian, dim}}, fixed_scale);
}

void FamilySpec::mask(std::span<double> grad) const noexcept {
  if (!fixed_scale_) return;
  for (const auto& c : coords_) grad[c.log_scale_index] = 0.0;
}

transforms::TransformSpec FamilySpec::sampler(std::span<const double> lambda) const {
  std::vector<transforms::TransformBlock> out;
  std::size_t offset = 0;
  for (const auto& b : blocks_) {
    std::vector<double> mean(b.dim), scale(b.dim);
    for (std::size_t j = 0; j < b.dim; ++j) {
      const Coordinate& c = coords_[offset + j];
      mean[j] = lambda[c.mean_index];
      scale[j] = std::exp(lambda[c.log_scale_index]);
    }
    if (b.kind == BlockKind::diag_gaussian) {
      Matrix chol(b.dim, b.dim);
      for (std::size_t j = 0; j < b.dim; ++j) chol(j, j) = scale[j];
      auto block = transforms::TransformSpec::multivariate_normal(offset, std::move(mean), std::move(chol));
      out.push_back(std::move(block));
    } else {
      out.push_back(transforms::TransformSpec::lognormal(offset, offset + b.dim, std::move(mean), std::move(scale)));
    }
    offset += b.dim;
  }
  return transforms::TransformSpec(std::move(out));
}

VarParams::VarParams(const FamilySpec& spec, std::vector<double> values) : values_(std::move(values)) {
  if (values_.size() != spec.param_dim()) {
    throw Error(ErrorCode::shape, "variational parameters: expected " + std::to_string(spec.param_dim()) +
                                      " values, got " + std::to_string(values_.size()));
  }
}

VarParams VarParams::uniform(const FamilySpec& spec, double mean, double log_scale) {
  std::vector<double> v(spec.param_dim());
  for (const auto& c : spec.coordinates()) {
    v[c.mean_index] = mean;
    v[c.log_scale_index] = log_scale;
  }
  return VarParams(spec, std::move(v));
}

LogDensity log_q(const FamilySpec& spec, const VarParams& lambda, std::span<const double> z) {
  double total = 0.0;
  for (std::size_t j = 0; j < spec.latent_dim(); ++j) {
    const Coordinate& c = spec.coordinate(j);
    const double m = lambda[c.mean_index];
    const double rho = lambda[c.log_scale_index];
    const double sigma = std::exp(rho);
    double x = z[j];
    if (c.kind == BlockKind::diag_lognormal) {
      if (!(x > 0.0)) return {-std::numeric_limits<double>::infinity(), true};
      x = std::log(x);
      total -= x;
    }
    const double r = (x - m) / sigma;
    total += -kHalfLog2Pi - rho - 0.5 * r * r;
  }
  return {total, false};
}

void score(const FamilySpec& spec, const VarParams& lambda, std::span<const double> z, std::span<double> out) {
  for (std::size_t j = 0; j < spec.latent_dim(); ++j) {
    const Coordinate& c = spec.coordinate(j);
    const double m = lambda[c.mean_index];
    const double inv_var = std::exp(-2.0 * lambda[c.log_scale_index]);
    const double x = c.kind == BlockKind::diag_lognormal ? std::log(z[j]) : z[j];
    const double delta = x - m;
    out[c.mean_index] = delta * inv_var;
    out[c.log_scale_index] = delta * delta * inv_var - 1.0;
  }
}

std::vector<double> score(const FamilySpec& spec, const VarParams& lambda, std::span<const double> z) {
  std::vector<double> out(spec.param_dim());
  score(spec, lambda, z, out);
  return out;
}

void grad_z_log_q(const FamilySpec& spec, const VarParams& lambda, std::span<const double> z,
                  std::span<double> out) {
  for (std::size_t j = 0; j < spec.latent_dim(); ++j) {
    const Coordinate& c = spec.coordinate(j);
    const double m = lambda[c.mean_index];
    const double inv_var = std::exp(-2.0 * lambda[c.log_scale_index]);
    if (c.kind == BlockKind::diag_gaussian) {
      out[j] = -(z[j] - m) * inv_var;
    } else {
      const double lz = std::log(z[j]);
      out[j] = (-1.0 - (lz - m) * inv_var) / z[j];
    }
  }
}

void reparam(const FamilySpec& spec, const VarParams& lambda, std::span<const double> eps, std::span<double> z) {
  for (std::size_t j = 0; j < spec.latent_dim(); ++j) {
    const Coordinate& c = spec.coordinate(j);
    const double x = lambda[c.mean_index] + std::exp(lambda[c.log_scale_index]) * eps[j];
    z[j] = c.kind == BlockKind::diag_gaussian ? x : std::exp(x);
  }
}

std::vector<double> reparam(const FamilySpec& spec, const VarParams& lambda, std::span<const double> eps) {
  std::vector<double> z(spec.latent_dim());
  reparam(spec, lambda, eps, z);
  return z;
}

void reparam_vjp_add(const FamilySpec& spec, const VarParams& lambda, std::span<const double> eps,
                     std::span<const double> cotangent, std::span<double> out) {
  for (std::size_t j = 0; j < spec.latent_dim(); ++j) {
    const Coordinate& c = spec.coordinate(j);
    const double sigma = std::exp(lambda[c.log_scale_index]);
    double g = cotangent[j];
    if (c.kind == BlockKind::diag_lognormal) g *= std::exp(lambda[c.mean_index] + sigma * eps[j]);
    out[c.mean_index] += g;
    out[c.log_scale_index] += g * sigma * eps[j];
  }
}

std::vector<double> reparam_vjp(const FamilySpec& spec, const VarParams& lambda, std::span<const double> eps,
                                std::span<const double> cotangent) {
  std::vector<double> out(spec.param_dim(), 0.0);
  reparam_vjp_add(spec, lambda, eps, cotangent, out);
  return out;
}

double entropy(const FamilySpec& spec, const VarParams& lambda) {
  double h = 0.0;
  for (const auto& c : spec.coordinates()) {
    h += lambda[c.log_scale_index] + kHalfLog2PiE;
    if (c.kind == BlockKind::diag_lognormal) h += lambda[c.mean_index];
  }
  return h;
}

std::vector<double> entropy_grad(const FamilySpec& spec, const VarParams& lambda) {
  (void)lambda;
  std::vector<double> g(spec.param_dim(), 0.0);
  for (const auto& c : spec.coordinates()) {
    g[c.log_scale_index] = 1.0;
    if (c.kind == BlockKind::diag_lognormal) g[c.mean_index] = 1.0;
  }
  return g;
}

}  // namespace qmcvi::families
