#include "qmcvi/transforms.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "qmcvi/error.hpp"

namespace qmcvi::transforms {

double normal_cdf(double x) noexcept { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

double inverse_normal_cdf_unchecked(double u) noexcept {
  const double p = std::clamp(u, kClampLow, kClampHigh);
  const double q = p - 0.5;
  if (std::abs(q) <= 0.425) {
    const double r = 0.180625 - q * q;
    return q *
           (((((((r * 2509.0809287301226727 + 33430.575583588128105) * r + 67265.770927008700853) * r +
                45921.953931549871457) * r + 13731.693765509461125) * r + 1971.5909503065514427) * r +
             133.14166789178437745) * r + 3.387132872796366608) /
           (((((((r * 5226.495278852545925 + 28729.085735721942674) * r + 39307.89580009271061) * r +
                21213.794301586595867) * r + 5394.1960214247511077) * r + 687.1870074920579083) * r +
             42.313330701600911252) * r + 1.0);
  }
  double r = std::sqrt(-std::log(q < 0.0 ? p : 1.0 - p));
  double val;
  if (r <= 5.0) {
    r -= 1.6;
    val = (((((((r * 7.7454501427834140764e-4 + 0.0227238449892691845833) * r + 0.24178072517745061177) * r +
               1.27045825245236838258) * r + 3.64784832476320460504) * r + 5.7694972214606914055) * r +
            4.6303378461565452959) * r + 1.42343711074968357734) /
          (((((((r * 1.05075007164441684324e-9 + 5.475938084995344946e-4) * r + 0.0151986665636164571966) * r +
               0.14810397642748007459) * r + 0.68976733498510000455) * r + 1.6763848301838038494) * r +
            2.05319162663775882187) * r + 1.0);
  } else {
    r -= 5.0;
    val = (((((((r * 2.01033439929228813265e-7 + 2.71155556874348757815e-5) * r + 0.0012426609473880784386) * r +
               0.026532189526576123093) * r + 0.29656057182850489123) * r + 1.7848265399172913358) * r +
            5.4637849111641143699) * r + 6.6579046435011037772) /
          (((((((r * 2.04426310338993978564e-15 + 1.4215117583164458887e-7) * r + 1.8463183175100546818e-5) * r +
               7.868691311456132591e-4) * r + 0.0148753612908506148525) * r + 0.13692988092273580531) * r +
            0.59983220655588793769) * r + 1.0);
  }
  return q < 0.0 ? -val : val;
}

double inverse_normal_cdf(double u) {
  if (!(u >= 0.0 && u <= 1.0)) throw Error(ErrorCode::domain, "inverse_normal_cdf: u outside [0,1]");
  return inverse_normal_cdf_unchecked(u);
}

Matrix cholesky(const Matrix& sigma) {
  const std::size_t n = sigma.rows();
  if (sigma.cols() != n) throw Error(ErrorCode::shape, "cholesky: matrix is not square");
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < i; ++j) {
      const double a = sigma(i, j), b = sigma(j, i);
      if (std::abs(a - b) > 1e-12 * std::max({1.0, std::abs(a), std::abs(b)})) {
        throw Error(ErrorCode::shape, "cholesky: matrix is not symmetric");
      }
    }
  Matrix l(n, n);
  for (std::size_t j = 0; j < n; ++j) {
    double pivot = sigma(j, j);
    for (std::size_t k = 0; k < j; ++k) pivot -= l(j, k) * l(j, k);
    if (!(pivot > 0.0)) {
      throw DecompositionError(j, "cholesky: non-positive pivot at index " + std::to_string(j));
    }
    const double diag = std::sqrt(pivot);
    l(j, j) = diag;
    for (std::size_t i = j + 1; i < n; ++i) {
      double s = sigma(i, j);
      for (std::size_t k = 0; k < j; ++k) s -= l(i, k) * l(j, k);
      l(i, j) = s / diag;
    }
  }
  return l;
}

TransformSpec::TransformSpec(std::vector<TransformBlock> blocks) : blocks_(std::move(blocks)) {
  std::size_t next = 0;
  for (const auto& b : blocks_) {
    if (b.begin != next || b.end <= b.begin) {
      throw Error(ErrorCode::shape, "transform blocks must tile [0, d) contiguously");
    }
    const std::size_t k = b.size();
    switch (b.kind) {
      case BlockKind::standard_normal: break;
      case BlockKind::lognormal:
        if ((b.location.size() != 1 && b.location.size() != k) || (b.scale.size() != 1 && b.scale.size() != k)) {
          throw Error(ErrorCode::shape, "lognormal block: mu/sigma length mismatch");
        }
        for (double s : b.scale)
          if (!(s > 0.0)) throw Error(ErrorCode::shape, "lognormal block: sigma must be positive");
        break;
      case BlockKind::multivariate_normal:
        if (b.location.size() != k || b.chol.rows() != k || b.chol.cols() != k) {
          throw Error(ErrorCode::shape, "multivariate normal block: mean/factor size mismatch");
        }
        for (std::size_t i = 0; i < k; ++i) {
          if (!(b.chol(i, i) > 0.0)) throw Error(ErrorCode::shape, "Cholesky factor needs a positive diagonal");
          for (std::size_t j = i + 1; j < k; ++j)
            if (b.chol(i, j) != 0.0) throw Error(ErrorCode::shape, "Cholesky factor must be lower triangular");
        }
        break;
    }
    next = b.end;
  }
  if (next == 0) throw Error(ErrorCode::shape, "transform spec has no blocks");
  dim_ = next;
}

TransformBlock TransformSpec::standard_normal(std::size_t begin, std::size_t end) {
  return TransformBlock{BlockKind::standard_normal, begin, end, {}, {}, {}};
}

TransformBlock TransformSpec::lognormal(std::size_t begin, std::size_t end, std::vector<double> mu,
                                        std::vector<double> sigma) {
  return TransformBlock{BlockKind::lognormal, begin, end, std::move(mu), std::move(sigma), {}};
}

TransformBlock TransformSpec::multivariate_normal(std::size_t begin, std::vector<double> mean, Matrix chol) {
  const std::size_t k = mean.size();
  return TransformBlock{BlockKind::multivariate_normal, begin, begin + k, std::move(mean), {}, std::move(chol)};
}

void TransformSpec::apply_point(std::span<const double> u, std::span<double> z) const {
  for (const auto& b : blocks_) {
    const std::size_t k = b.size();
    switch (b.kind) {
      case BlockKind::standard_normal:
        for (std::size_t j = b.begin; j < b.end; ++j) z[j] = inverse_normal_cdf_unchecked(u[j]);
        break;
      case BlockKind::lognormal:
        for (std::size_t j = 0; j < k; ++j) {
          const double mu = b.location.size() == 1 ? b.location[0] : b.location[j];
          const double sigma = b.scale.size() == 1 ? b.scale[0] : b.scale[j];
          z[b.begin + j] = std::exp(mu + sigma * inverse_normal_cdf_unchecked(u[b.begin + j]));
        }
        break;
      case BlockKind::multivariate_normal: {
        // Lower-triangular product computed back to front so z can hold eps in place.
        for (std::size_t j = 0; j < k; ++j) z[b.begin + j] = inverse_normal_cdf_unchecked(u[b.begin + j]);
        for (std::size_t i = k; i-- > 0;) {
          double s = 0.0;
          for (std::size_t j = 0; j <= i; ++j) s += b.chol(i, j) * z[b.begin + j];
          z[b.begin + i] = b.location[i] + s;
        }
        break;
      }
    }
  }
}

Matrix apply(const TransformSpec& spec, const lds::UniformBatch& batch, ExecPolicy exec) {
  if (batch.dim() != spec.dim()) {
    throw Error(ErrorCode::shape, "transform: batch has " + std::to_string(batch.dim()) +
                                      " coordinates, spec needs " + std::to_string(spec.dim()));
  }
  Matrix out(batch.size(), spec.dim());
  kernels::for_each_index(batch.size(), exec, [&](std::size_t i) { spec.apply_point(batch.row(i), out.row(i)); });
  return out;
}

}  // namespace qmcvi::transforms
