#pragma once

// Uniform point sources on [0,1)^d: pseudo-random (MC), Sobol (QMC) and
// randomized Sobol (RQMC, digital shift or linear matrix scramble + shift).

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "qmcvi/exec.hpp"

namespace qmcvi::lds {

inline constexpr unsigned kBits = 32;
using Word = std::uint32_t;

enum class SequenceKind { mc, qmc_sobol, rqmc_shift, rqmc_scramble };

std::string_view to_string(SequenceKind kind) noexcept;
// Accepts "mc", "qmc", "qmc-sobol", "rqmc-shift", "rqmc-scramble".
SequenceKind parse_sequence_kind(std::string_view name);

struct SequenceSource {
  SequenceKind kind = SequenceKind::mc;
  std::size_t dim = 1;
  std::uint64_t seed = 0;
  std::uint64_t skip = 0;

  bool operator==(const SequenceSource&) const = default;
};

// N x d block of points in [0,1), row-major. Row i is point i.
class UniformBatch {
 public:
  // Throws Error(domain) if any entry is outside [0,1), Error(shape) on a size mismatch.
  UniformBatch(std::size_t n, std::size_t d, std::vector<double> points,
               std::optional<SequenceSource> origin = std::nullopt);

  // n x d batch with every coordinate equal to `value`.
  static UniformBatch constant(std::size_t n, std::size_t d, double value);

  std::size_t size() const noexcept { return n_; }
  std::size_t dim() const noexcept { return d_; }

  double operator()(std::size_t i, std::size_t j) const noexcept { return points_[i * d_ + j]; }
  std::span<const double> row(std::size_t i) const noexcept { return {points_.data() + i * d_, d_}; }
  std::span<const double> values() const noexcept { return points_; }

  const std::optional<SequenceSource>& origin() const noexcept { return origin_; }

  bool operator==(const UniformBatch&) const = default;

 private:
  std::size_t n_;
  std::size_t d_;
  std::vector<double> points_;
  std::optional<SequenceSource> origin_;
};

// One line of the Joe–Kuo table: primitive polynomial of degree `degree` with
// interior coefficient bits `coefficients` (highest first) and initial
// direction integers m_1..m_degree.
struct PrimitiveEntry {
  unsigned degree = 0;
  std::uint32_t coefficients = 0;
  std::vector<std::uint32_t> initial;
};

class DirectionTable {
 public:
  // Parses the `d s a m_1 ... m_s` text format. Lines that do not start with
  // a digit (headers, `#` comments, blanks) are skipped. Dimensions must be
  // listed contiguously starting at 2; dimension 1 is implicit.
  static DirectionTable parse(std::istream& in);
  static DirectionTable load(const std::filesystem::path& path);
  // Table compiled into the library (4096 dimensions).
  static const DirectionTable& bundled();

  std::size_t max_dim() const noexcept { return entries_.size() + 1; }

  // 1-based. Dimension 1 reports degree 0 (van der Corput).
  const PrimitiveEntry& entry(std::size_t dim) const;

  // Direction words v_1..v_32 for `dim`, v_k = m_k * 2^(32-k).
  std::array<Word, kBits> directions(std::size_t dim) const;

 private:
  std::vector<PrimitiveEntry> entries_;  // dims 2..max_dim
};

// Per-dimension randomization drawn from a seed. Column c of a scramble
// matrix is the image of digit c (the 2^-(c+1) digit): unit diagonal,
// random bits below it.
struct Randomization {
  std::vector<Word> shift;
  std::vector<std::array<Word, kBits>> scramble;  // empty for a pure shift

  static Randomization draw(SequenceKind kind, std::size_t dim, std::uint64_t seed);

  // Scramble matrix of dimension j applied to x (identity for a pure shift).
  Word linear(std::size_t j, Word x) const noexcept;
  Word apply(std::size_t j, Word x) const noexcept;
};

// Pure in (source, n). Throws Error(empty_request) for n == 0,
// Error(unsupported_dimension) for dim == 0 or beyond the table.
UniformBatch generate(const SequenceSource& source, std::size_t n,
                      const DirectionTable& table = DirectionTable::bundled(),
                      ExecPolicy exec = ExecPolicy::parallel);

enum class RandomizeMode { shift, scramble };

// Randomizes an unscrambled Sobol batch. Coordinates must be exact 32-bit
// dyadic fractions. randomize(generate(qmc), m, s) == generate(rqmc-m with seed s).
UniformBatch randomize(const UniformBatch& base, RandomizeMode mode, std::uint64_t seed);

// Exact star discrepancy of a 2-d point set (n <= 512).
double star_discrepancy_2d(const UniformBatch& batch);

inline constexpr std::size_t kStarDiscrepancyMaxPoints = 512;

}  // namespace qmcvi::lds
