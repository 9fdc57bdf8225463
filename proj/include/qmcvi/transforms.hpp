#pragma once

// Maps uniform batches to target distributions through per-coordinate
// inverse CDFs and Cholesky factors.

#include <cstddef>
#include <span>
#include <vector>

#include "qmcvi/lds.hpp"
#include "qmcvi/matrix.hpp"

namespace qmcvi::transforms {

// Inputs are clamped to [kClampLow, kClampHigh] before inversion so that the
// Sobol origin maps to a finite value.
inline constexpr double kClampLow = 0x1.0p-33;
inline constexpr double kClampHigh = 1.0 - 0x1.0p-33;

double normal_cdf(double x) noexcept;

// Standard normal quantile (Wichura's AS 241, double precision variant).
// Throws Error(domain) for u outside [0,1] or NaN.
double inverse_normal_cdf(double u);

// Unchecked variant for inputs already known to lie in [0,1].
double inverse_normal_cdf_unchecked(double u) noexcept;

// Lower-triangular L with L L^T = sigma. Throws Error(shape) for a non-square
// or asymmetric input and DecompositionError at the first non-positive pivot.
Matrix cholesky(const Matrix& sigma);

enum class BlockKind { standard_normal, lognormal, multivariate_normal };

// Coordinates [begin, end) of the output use this block; each block consumes
// the same number of uniform coordinates as it produces.
struct TransformBlock {
  BlockKind kind = BlockKind::standard_normal;
  std::size_t begin = 0;
  std::size_t end = 0;
  std::vector<double> location;  // lognormal mu, or MVN mean
  std::vector<double> scale;     // lognormal sigma
  Matrix chol;                   // MVN only

  std::size_t size() const noexcept { return end - begin; }
};

class TransformSpec {
 public:
  // Blocks must tile [0, d) in order. Throws Error(shape) otherwise, and for
  // an invalid Cholesky factor (not lower triangular, non-positive diagonal).
  explicit TransformSpec(std::vector<TransformBlock> blocks);

  static TransformBlock standard_normal(std::size_t begin, std::size_t end);
  // mu and sigma are either length 1 (broadcast) or end - begin.
  static TransformBlock lognormal(std::size_t begin, std::size_t end, std::vector<double> mu,
                                  std::vector<double> sigma);
  static TransformBlock multivariate_normal(std::size_t begin, std::vector<double> mean, Matrix chol);

  std::size_t dim() const noexcept { return dim_; }
  std::span<const TransformBlock> blocks() const noexcept { return blocks_; }

  // Maps one point; u and z have length dim().
  void apply_point(std::span<const double> u, std::span<double> z) const;

 private:
  std::vector<TransformBlock> blocks_;
  std::size_t dim_ = 0;
};

// N x dim() matrix of samples. Throws Error(shape) if batch.dim() != spec.dim().
Matrix apply(const TransformSpec& spec, const lds::UniformBatch& batch,
             ExecPolicy exec = ExecPolicy::parallel);

}  // namespace qmcvi::transforms
