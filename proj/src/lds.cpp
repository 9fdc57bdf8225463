#include "qmcvi/lds.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>
#include <sstream>

#include "qmcvi/error.hpp"
#include "qmcvi/rng.hpp"

namespace qmcvi::lds {

namespace detail {
extern const char* const kBundledDirections;
}

namespace {

constexpr std::uint64_t kMcStream = 0x4d43;            // "MC"
constexpr std::uint64_t kShiftStream = 0x5348494654;   // "SHIFT"
constexpr std::uint64_t kScrambleStream = 0x4c4d53;    // "LMS"
constexpr std::size_t kSobolChunk = 4096;
constexpr double kWordScale = 0x1.0p-32;

bool is_sobol(SequenceKind kind) { return kind != SequenceKind::mc; }

std::string describe_dim(std::size_t dim, std::size_t max_dim) {
  return "dimension " + std::to_string(dim) + " outside the supported range [1, " +
         std::to_string(max_dim) + "]";
}

}  // namespace

std::string_view to_string(SequenceKind kind) noexcept {
  switch (kind) {
    case SequenceKind::mc: return "mc";
    case SequenceKind::qmc_sobol: return "qmc";
    case SequenceKind::rqmc_shift: return "rqmc-shift";
    case SequenceKind::rqmc_scramble: return "rqmc-scramble";
  }
  return "unknown";
}

SequenceKind parse_sequence_kind(std::string_view name) {
  if (name == "mc") return SequenceKind::mc;
  if (name == "qmc" || name == "qmc-sobol") return SequenceKind::qmc_sobol;
  if (name == "rqmc-shift") return SequenceKind::rqmc_shift;
  if (name == "rqmc-scramble" || name == "rqmc") return SequenceKind::rqmc_scramble;
  throw Error(ErrorCode::invalid_config, "unknown sequence kind '" + std::string(name) + "'");
}

// ---------------------------------------------------------------------------
// UniformBatch

UniformBatch::UniformBatch(std::size_t n, std::size_t d, std::vector<double> points,
                           std::optional<SequenceSource> origin)
    : n_(n), d_(d), points_(std::move(points)), origin_(origin) {
  if (n_ == 0 || d_ == 0) throw Error(ErrorCode::shape, "uniform batch needs n >= 1 and d >= 1");
  if (points_.size() != n_ * d_) {
    throw Error(ErrorCode::shape, "uniform batch: expected " + std::to_string(n_ * d_) +
                                      " values, got " + std::to_string(points_.size()));
  }
  for (double u : points_) {
    if (!(u >= 0.0 && u < 1.0)) throw Error(ErrorCode::domain, "uniform batch entry outside [0,1)");
  }
}

UniformBatch UniformBatch::constant(std::size_t n, std::size_t d, double value) {
  return UniformBatch(n, d, std::vector<double>(n * d, value));
}

// ---------------------------------------------------------------------------
// DirectionTable

DirectionTable DirectionTable::parse(std::istream& in) {
  DirectionTable table;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || !std::isdigit(static_cast<unsigned char>(line[first]))) continue;
    std::istringstream fields(line);
    std::size_t dim = 0;
    unsigned degree = 0;
    std::uint64_t coeffs = 0;
    if (!(fields >> dim >> degree >> coeffs)) {
      throw Error(ErrorCode::io, "direction table line " + std::to_string(line_no) + ": malformed");
    }
    if (dim != table.max_dim() + 1) {
      throw Error(ErrorCode::io, "direction table line " + std::to_string(line_no) +
                                     ": expected dimension " + std::to_string(table.max_dim() + 1));
    }
    if (degree == 0 || degree >= kBits || coeffs >= (std::uint64_t{1} << (degree - 1))) {
      throw Error(ErrorCode::io, "direction table line " + std::to_string(line_no) +
                                     ": bad polynomial degree or coefficients");
    }
    PrimitiveEntry entry{degree, static_cast<std::uint32_t>(coeffs), {}};
    for (unsigned k = 1; k <= degree; ++k) {
      std::uint64_t m = 0;
      if (!(fields >> m)) {
        throw Error(ErrorCode::io, "direction table line " + std::to_string(line_no) +
                                       ": missing direction integers");
      }
      if (m % 2 == 0 || m >= (std::uint64_t{1} << k)) {
        throw Error(ErrorCode::io, "direction table line " + std::to_string(line_no) +
                                       ": m_" + std::to_string(k) + " must be odd and < 2^" +
                                       std::to_string(k));
      }
      entry.initial.push_back(static_cast<std::uint32_t>(m));
    }
    table.entries_.push_back(std::move(entry));
  }
  return table;
}

DirectionTable DirectionTable::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::io, "cannot open direction table " + path.string());
  return parse(in);
}

const DirectionTable& DirectionTable::bundled() {
  static const DirectionTable table = [] {
    std::istringstream in(detail::kBundledDirections);
    return parse(in);
  }();
  return table;
}

const PrimitiveEntry& DirectionTable::entry(std::size_t dim) const {
  static const PrimitiveEntry van_der_corput{};
  if (dim == 0 || dim > max_dim()) throw Error(ErrorCode::unsupported_dimension, describe_dim(dim, max_dim()));
  return dim == 1 ? van_der_corput : entries_[dim - 2];
}

std::array<Word, kBits> DirectionTable::directions(std::size_t dim) const {
  const PrimitiveEntry& e = entry(dim);
  std::array<Word, kBits> v{};
  if (e.degree == 0) {
    for (unsigned k = 0; k < kBits; ++k) v[k] = Word{1} << (kBits - 1 - k);
    return v;
  }
  const unsigned s = e.degree;
  for (unsigned k = 0; k < s; ++k) v[k] = e.initial[k] << (kBits - 1 - k);
  for (unsigned k = s; k < kBits; ++k) {
    Word w = v[k - s] ^ (v[k - s] >> s);
    for (unsigned l = 1; l < s; ++l) {
      if ((e.coefficients >> (s - 1 - l)) & 1u) w ^= v[k - l];
    }
    v[k] = w;
  }
  return v;
}

// ---------------------------------------------------------------------------
// Randomization

Randomization Randomization::draw(SequenceKind kind, std::size_t dim, std::uint64_t seed) {
  Randomization r;
  r.shift.resize(dim);
  const CounterRng shift_rng(seed, kShiftStream);
  for (std::size_t j = 0; j < dim; ++j) r.shift[j] = static_cast<Word>(shift_rng.bits(j) >> 32);
  if (kind == SequenceKind::rqmc_scramble) {
    const CounterRng matrix_rng(seed, kScrambleStream);
    r.scramble.resize(dim);
    for (std::size_t j = 0; j < dim; ++j) {
      for (unsigned c = 0; c < kBits; ++c) {
        const Word diag = Word{1} << (kBits - 1 - c);
        const Word below = diag - 1;
        const auto bits = static_cast<Word>(matrix_rng.bits(j * kBits + c) >> 32);
        r.scramble[j][c] = diag | (bits & below);
      }
    }
  }
  return r;
}

Word Randomization::linear(std::size_t j, Word x) const noexcept {
  if (scramble.empty()) return x;
  Word y = 0;
  const auto& columns = scramble[j];
  while (x != 0) {
    const auto p = static_cast<unsigned>(std::countl_zero(x));
    y ^= columns[p];
    x &= ~(Word{1} << (kBits - 1 - p));
  }
  return y;
}

Word Randomization::apply(std::size_t j, Word x) const noexcept { return linear(j, x) ^ shift[j]; }

// ---------------------------------------------------------------------------
// generate

namespace {

void fill_mc(const SequenceSource& source, std::size_t n, std::vector<double>& out, ExecPolicy exec) {
  const CounterRng rng(source.seed, kMcStream);
  const std::size_t d = source.dim;
  kernels::for_each_index(n, exec, [&](std::size_t i) {
    const std::uint64_t base = (source.skip + i) * d;
    for (std::size_t j = 0; j < d; ++j) out[i * d + j] = rng.uniform(base + j);
  });
}

void fill_sobol(const SequenceSource& source, std::size_t n, const DirectionTable& table,
                std::vector<double>& out, ExecPolicy exec) {
  const std::size_t d = source.dim;
  std::vector<std::array<Word, kBits>> v(d);
  for (std::size_t j = 0; j < d; ++j) v[j] = table.directions(j + 1);

  std::vector<Word> start(d, 0);
  if (source.kind != SequenceKind::qmc_sobol) {
    // (M x) xor shift is affine in x: scramble the direction words once and
    // start the Gray-code walk at the shift.
    const Randomization r = Randomization::draw(source.kind, d, source.seed);
    for (std::size_t j = 0; j < d; ++j) {
      for (auto& w : v[j]) w = r.linear(j, w);
      start[j] = r.shift[j];
    }
  }

  const std::size_t chunks = (n + kSobolChunk - 1) / kSobolChunk;
  kernels::for_each_index(chunks, exec, [&](std::size_t c) {
    const std::size_t begin = c * kSobolChunk;
    const std::size_t end = std::min(n, begin + kSobolChunk);
    std::vector<Word> state(start);
    const std::uint64_t first = source.skip + begin;
    const std::uint64_t gray = first ^ (first >> 1);
    for (unsigned b = 0; b < kBits; ++b) {
      if ((gray >> b) & 1u) {
        for (std::size_t j = 0; j < d; ++j) state[j] ^= v[j][b];
      }
    }
    for (std::size_t i = begin; i < end; ++i) {
      const std::uint64_t index = source.skip + i;
      if (i != begin) {
        const auto bit = static_cast<unsigned>(std::countr_zero(index));
        for (std::size_t j = 0; j < d; ++j) state[j] ^= v[j][bit];
      }
      for (std::size_t j = 0; j < d; ++j) out[i * d + j] = static_cast<double>(state[j]) * kWordScale;
    }
  });
}

}  // namespace

UniformBatch generate(const SequenceSource& source, std::size_t n, const DirectionTable& table,
                      ExecPolicy exec) {
  if (n == 0) throw Error(ErrorCode::empty_request, "generate: requested zero points");
  if (source.dim == 0 || source.dim > table.max_dim()) {
    throw Error(ErrorCode::unsupported_dimension, describe_dim(source.dim, table.max_dim()));
  }
  if (is_sobol(source.kind) && source.skip + n > (std::uint64_t{1} << kBits)) {
    throw Error(ErrorCode::cost_guard, "generate: Sobol index range exceeds 2^32 points");
  }
  std::vector<double> out(n * source.dim);
  if (source.kind == SequenceKind::mc) {
    fill_mc(source, n, out, exec);
  } else {
    fill_sobol(source, n, table, out, exec);
  }
  SequenceSource origin = source;
  if (origin.kind == SequenceKind::qmc_sobol) origin.seed = 0;
  return UniformBatch(n, source.dim, std::move(out), origin);
}

UniformBatch randomize(const UniformBatch& base, RandomizeMode mode, std::uint64_t seed) {
  const SequenceKind kind = mode == RandomizeMode::shift ? SequenceKind::rqmc_shift : SequenceKind::rqmc_scramble;
  const std::size_t d = base.dim();
  const Randomization r = Randomization::draw(kind, d, seed);
  std::vector<double> out(base.values().size());
  for (std::size_t i = 0; i < base.size(); ++i) {
    for (std::size_t j = 0; j < d; ++j) {
      const double scaled = base(i, j) * 0x1.0p32;
      const auto w = static_cast<Word>(scaled);
      if (static_cast<double>(w) != scaled) {
        throw Error(ErrorCode::domain, "randomize: input is not a 32-bit digital net point");
      }
      out[i * d + j] = static_cast<double>(r.apply(j, w)) * kWordScale;
    }
  }
  std::optional<SequenceSource> origin;
  if (base.origin() && base.origin()->kind == SequenceKind::qmc_sobol) {
    origin = *base.origin();
    origin->kind = kind;
    origin->seed = seed;
  }
  return UniformBatch(base.size(), d, std::move(out), origin);
}

// ---------------------------------------------------------------------------
// star discrepancy

double star_discrepancy_2d(const UniformBatch& batch) {
  if (batch.dim() != 2) throw Error(ErrorCode::unsupported_dimension, "star discrepancy requires d = 2");
  const std::size_t n = batch.size();
  if (n > kStarDiscrepancyMaxPoints) {
    throw Error(ErrorCode::cost_guard, "star discrepancy: n = " + std::to_string(n) + " exceeds " +
                                           std::to_string(kStarDiscrepancyMaxPoints));
  }
  std::vector<double> xs, ys;
  for (std::size_t i = 0; i < n; ++i) {
    xs.push_back(batch(i, 0));
    ys.push_back(batch(i, 1));
  }
  xs.push_back(1.0);
  ys.push_back(1.0);
  std::sort(xs.begin(), xs.end());
  xs.erase(std::unique(xs.begin(), xs.end()), xs.end());
  std::sort(ys.begin(), ys.end());
  ys.erase(std::unique(ys.begin(), ys.end()), ys.end());

  const double inv_n = 1.0 / static_cast<double>(n);
  double worst = 0.0;
  std::vector<double> closed, open;
  for (double b1 : xs) {
    closed.clear();
    open.clear();
    for (std::size_t i = 0; i < n; ++i) {
      if (batch(i, 0) <= b1) closed.push_back(batch(i, 1));
      if (batch(i, 0) < b1) open.push_back(batch(i, 1));
    }
    std::sort(closed.begin(), closed.end());
    std::sort(open.begin(), open.end());
    for (double b2 : ys) {
      const double volume = b1 * b2;
      const auto in_closed = std::upper_bound(closed.begin(), closed.end(), b2) - closed.begin();
      const auto in_open = std::lower_bound(open.begin(), open.end(), b2) - open.begin();
      worst = std::max(worst, static_cast<double>(in_closed) * inv_n - volume);
      worst = std::max(worst, volume - static_cast<double>(in_open) * inv_n);
    }
  }
  return worst;
}

}  // namespace qmcvi::lds
