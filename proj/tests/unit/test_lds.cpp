#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <sstream>

#include "oracles.hpp"
#include "qmcvi/error.hpp"
#include "qmcvi/lds.hpp"
#include "qmcvi/rng.hpp"

using namespace qmcvi;
using lds::SequenceKind;

namespace {

std::vector<std::uint32_t> words(const lds::UniformBatch& b) {
  std::vector<std::uint32_t> out;
  for (double v : b.values()) out.push_back(static_cast<std::uint32_t>(std::ldexp(v, 32)));
  return out;
}

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no qmcvi::Error thrown";
  return ErrorCode::io;
}

}  // namespace

TEST(Sobol, FirstPointsOfDimensionOne) {
  const auto b = lds::generate({SequenceKind::qmc_sobol, 1, 0, 0}, 4);
  EXPECT_EQ(b(0, 0), 0.0);
  EXPECT_EQ(b(1, 0), 0.5);
  EXPECT_EQ(b(2, 0), 0.75);
  EXPECT_EQ(b(3, 0), 0.25);
}

TEST(Sobol, DimensionOneIsGrayCodeVanDerCorput) {
  const std::size_t n = 1 << 12;
  const auto b = lds::generate({SequenceKind::qmc_sobol, 1, 0, 0}, n);
  for (std::size_t i = 0; i < n; ++i) ASSERT_EQ(b(i, 0), oracle::van_der_corput_gray(i)) << "i=" << i;
}

// Reference words from scipy.stats.qmc.Sobol(4, scramble=False), times 2^32.
TEST(Sobol, MatchesFrozenReferencePrefix) {
  const std::uint32_t expect[16][4] = {
      {0u, 0u, 0u, 0u},
      {2147483648u, 2147483648u, 2147483648u, 2147483648u},
      {3221225472u, 1073741824u, 1073741824u, 1073741824u},
      {1073741824u, 3221225472u, 3221225472u, 3221225472u},
      {1610612736u, 1610612736u, 2684354560u, 3758096384u},
      {3758096384u, 3758096384u, 536870912u, 1610612736u},
      {2684354560u, 536870912u, 3758096384u, 2684354560u},
      {536870912u, 2684354560u, 1610612736u, 536870912u},
      {805306368u, 1342177280u, 4026531840u, 1879048192u},
      {2952790016u, 3489660928u, 1879048192u, 4026531840u},
      {4026531840u, 268435456u, 2952790016u, 805306368u},
      {1879048192u, 2415919104u, 805306368u, 2952790016u},
      {1342177280u, 805306368u, 1342177280u, 2415919104u},
      {3489660928u, 2952790016u, 3489660928u, 268435456u},
      {2415919104u, 1879048192u, 268435456u, 3489660928u},
      {268435456u, 4026531840u, 2415919104u, 1342177280u},
  };
  const auto w = words(lds::generate({SequenceKind::qmc_sobol, 4, 0, 0}, 16));
  for (std::size_t i = 0; i < 16; ++i) {
    for (std::size_t j = 0; j < 4; ++j) EXPECT_EQ(w[i * 4 + j], expect[i][j]) << i << "," << j;
  }
}

TEST(Sobol, MatchesFrozenReferenceInHighDimensions) {
  const std::size_t dims[] = {1, 2, 3, 4, 1012, 2048};
  const std::pair<std::size_t, std::array<std::uint32_t, 6>> rows[] = {
      {100, {1778384896u, 1107296256u, 3321888768u, 3120562176u, 1644167168u, 1509949440u}},
      {777, {2973761536u, 4022337536u, 700448768u, 1178599424u, 3946840064u, 884998144u}},
      {1023, {4194304u, 3233808384u, 2629828608u, 624951296u, 3292528640u, 1035993088u}},
  };
  const auto b = lds::generate({SequenceKind::qmc_sobol, 2048, 0, 0}, 1024);
  for (const auto& [i, expect] : rows) {
    for (std::size_t c = 0; c < 6; ++c) {
      EXPECT_EQ(static_cast<std::uint32_t>(std::ldexp(b(i, dims[c] - 1), 32)), expect[c])
          << "point " << i << " dim " << dims[c];
    }
  }
}

TEST(Sobol, MatchesIndependentOracle) {
  const std::size_t d = 40, n = 2048;
  const auto w = words(lds::generate({SequenceKind::qmc_sobol, d, 0, 0}, n));
  EXPECT_EQ(w, oracle::sobol_words(lds::DirectionTable::bundled(), d, n));
}

TEST(Sobol, SkipStartsLaterInTheSequence) {
  const auto all = lds::generate({SequenceKind::qmc_sobol, 3, 0, 0}, 5000);
  const auto tail = lds::generate({SequenceKind::qmc_sobol, 3, 0, 4093}, 907);
  for (std::size_t i = 0; i < tail.size(); ++i) {
    for (std::size_t j = 0; j < 3; ++j) ASSERT_EQ(tail(i, j), all(i + 4093, j));
  }
}

TEST(Sobol, SeedIsIgnored) {
  EXPECT_EQ(lds::generate({SequenceKind::qmc_sobol, 3, 1, 0}, 64), lds::generate({SequenceKind::qmc_sobol, 3, 99, 0}, 64));
}

TEST(Sobol, NetPropertyOnSmallInstances) {
  // t-values of the bundled table: 0 for d <= 2, 1 for d = 3, 2 for d = 4.
  const unsigned t_of[] = {0, 0, 0, 1, 2};
  for (std::size_t d = 1; d <= 4; ++d) {
    for (unsigned m = 1; m <= 6; ++m) {
      const auto w = words(lds::generate({SequenceKind::qmc_sobol, d, 0, 0}, std::size_t{1} << m));
      EXPECT_TRUE(oracle::is_net(w, d, m, t_of[d])) << "d=" << d << " m=" << m;
    }
  }
  EXPECT_FALSE(oracle::is_net(words(lds::generate({SequenceKind::qmc_sobol, 3, 0, 0}, 16)), 3, 4, 0));
}

TEST(Randomize, ShiftOfOriginIsTheShift) {
  const auto r = lds::Randomization::draw(SequenceKind::rqmc_shift, 3, 42);
  const auto b = lds::generate({SequenceKind::rqmc_shift, 3, 42, 0}, 1);
  for (std::size_t j = 0; j < 3; ++j) EXPECT_EQ(b(0, j), std::ldexp(static_cast<double>(r.shift[j]), -32));
}

TEST(Randomize, MatchesGenerate) {
  const auto base = lds::generate({SequenceKind::qmc_sobol, 5, 0, 0}, 300);
  EXPECT_EQ(lds::randomize(base, lds::RandomizeMode::shift, 7), lds::generate({SequenceKind::rqmc_shift, 5, 7, 0}, 300));
  EXPECT_EQ(lds::randomize(base, lds::RandomizeMode::scramble, 7),
            lds::generate({SequenceKind::rqmc_scramble, 5, 7, 0}, 300));
}

TEST(Randomize, IsDeterministicGivenSeed) {
  const auto base = lds::generate({SequenceKind::qmc_sobol, 2, 0, 0}, 64);
  EXPECT_EQ(lds::randomize(base, lds::RandomizeMode::scramble, 5), lds::randomize(base, lds::RandomizeMode::scramble, 5));
  EXPECT_NE(lds::randomize(base, lds::RandomizeMode::scramble, 5), lds::randomize(base, lds::RandomizeMode::scramble, 6));
}

TEST(Randomize, RejectsNonDyadicInput) {
  const lds::UniformBatch b(1, 1, {0.1});
  EXPECT_EQ(code_of([&] { lds::randomize(b, lds::RandomizeMode::shift, 1); }), ErrorCode::domain);
}

TEST(Randomize, FirstPointIsMarginallyUniform) {
  for (auto kind : {SequenceKind::rqmc_shift, SequenceKind::rqmc_scramble}) {
    double s0 = 0.0, s1 = 0.0;
    for (std::uint64_t seed = 0; seed < 1000; ++seed) {
      const auto b = lds::generate({kind, 2, seed, 0}, 2);
      s0 += b(1, 0);
      s1 += b(1, 1);
    }
    EXPECT_NEAR(s0 / 1000.0, 0.5, 0.05);
    EXPECT_NEAR(s1 / 1000.0, 0.5, 0.05);
  }
}

TEST(Randomize, PooledPointsPassKolmogorovSmirnov) {
  const double critical = 1.628 / std::sqrt(1e4);  // 1% level
  for (auto kind : {SequenceKind::rqmc_shift, SequenceKind::rqmc_scramble}) {
    std::vector<std::vector<double>> pooled(3);
    for (std::uint64_t seed = 0; seed < 625; ++seed) {
      const auto b = lds::generate({kind, 3, seed, 0}, 16);
      for (std::size_t i = 0; i < 16; ++i) {
        for (std::size_t j = 0; j < 3; ++j) pooled[j].push_back(b(i, j));
      }
    }
    for (auto& xs : pooled) {
      std::sort(xs.begin(), xs.end());
      const auto n = static_cast<double>(xs.size());
      double ks = 0.0;
      for (std::size_t i = 0; i < xs.size(); ++i) {
        ks = std::max({ks, (i + 1) / n - xs[i], xs[i] - i / n});
      }
      EXPECT_LT(ks, critical) << lds::to_string(kind);
    }
  }
}

TEST(Randomize, ScramblingKeepsTheNetProperty) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto w2 = words(lds::generate({SequenceKind::rqmc_scramble, 2, seed, 0}, 16));
    EXPECT_EQ(oracle::net_quality(w2, 2, 4), 0u);
    const auto w4 = words(lds::generate({SequenceKind::rqmc_scramble, 4, seed, 0}, 64));
    EXPECT_EQ(oracle::net_quality(w4, 4, 6), oracle::net_quality(words(lds::generate({SequenceKind::qmc_sobol, 4, 0, 0}, 64)), 4, 6));
  }
}

TEST(MonteCarlo, PerDimensionMean) {
  for (std::uint64_t seed : {0ull, 1ull, 12345ull}) {
    const auto b = lds::generate({SequenceKind::mc, 2, seed, 0}, 256);
    for (std::size_t j = 0; j < 2; ++j) {
      double s = 0.0;
      for (std::size_t i = 0; i < 256; ++i) s += b(i, j);
      EXPECT_NEAR(s / 256.0, 0.5, 0.1);
    }
  }
}

TEST(MonteCarlo, ReproducibleAndSeedDependent) {
  const lds::SequenceSource src{SequenceKind::mc, 3, 9, 0};
  EXPECT_EQ(lds::generate(src, 100), lds::generate(src, 100));
  EXPECT_NE(lds::generate(src, 100).values()[0], lds::generate({SequenceKind::mc, 3, 10, 0}, 100).values()[0]);
  const auto skipped = lds::generate({SequenceKind::mc, 3, 9, 40}, 60);
  const auto full = lds::generate(src, 100);
  for (std::size_t i = 0; i < 60; ++i) EXPECT_EQ(skipped(i, 2), full(i + 40, 2));
}

TEST(Generate, ParallelMatchesReference) {
  for (auto kind : {SequenceKind::mc, SequenceKind::qmc_sobol, SequenceKind::rqmc_shift, SequenceKind::rqmc_scramble}) {
    const lds::SequenceSource src{kind, 7, 3, 11};
    EXPECT_EQ(lds::generate(src, 10000, lds::DirectionTable::bundled(), ExecPolicy::reference),
              lds::generate(src, 10000, lds::DirectionTable::bundled(), ExecPolicy::parallel));
  }
}

TEST(Generate, Errors) {
  EXPECT_EQ(code_of([] { lds::generate({SequenceKind::mc, 2, 0, 0}, 0); }), ErrorCode::empty_request);
  EXPECT_EQ(code_of([] { lds::generate({SequenceKind::qmc_sobol, 0, 0, 0}, 4); }), ErrorCode::unsupported_dimension);
  const std::size_t too_big = lds::DirectionTable::bundled().max_dim() + 1;
  EXPECT_EQ(code_of([&] { lds::generate({SequenceKind::rqmc_scramble, too_big, 0, 0}, 4); }),
            ErrorCode::unsupported_dimension);
  EXPECT_EQ(code_of([] { lds::generate({SequenceKind::qmc_sobol, 1, 0, 0xFFFFFFFFull}, 2); }), ErrorCode::cost_guard);
}

TEST(UniformBatch, ValidatesEntriesAndShape) {
  EXPECT_EQ(code_of([] { lds::UniformBatch(1, 2, {0.5, 1.0}); }), ErrorCode::domain);
  EXPECT_EQ(code_of([] { lds::UniformBatch(1, 2, {-0.1, 0.5}); }), ErrorCode::domain);
  EXPECT_EQ(code_of([] { lds::UniformBatch(2, 2, {0.5, 0.5}); }), ErrorCode::shape);
  const auto c = lds::UniformBatch::constant(3, 2, 0.25);
  EXPECT_EQ(c.size(), 3u);
  EXPECT_EQ(c(2, 1), 0.25);
}

TEST(DirectionTable, BundledTableCoversRegressionDimension) {
  const auto& t = lds::DirectionTable::bundled();
  EXPECT_GE(t.max_dim(), 2048u);
  EXPECT_EQ(t.entry(1).degree, 0u);
  for (std::size_t d = 2; d <= t.max_dim(); ++d) {
    const auto& e = t.entry(d);
    for (unsigned k = 1; k <= e.degree; ++k) {
      ASSERT_EQ(e.initial[k - 1] % 2, 1u);
      ASSERT_LT(e.initial[k - 1], 1u << k);
    }
  }
}

TEST(DirectionTable, ParsesTheTextFormat) {
  std::istringstream in("d s a m_i\n2 1 0 1\n3 2 1 1 3\n");
  const auto t = lds::DirectionTable::parse(in);
  EXPECT_EQ(t.max_dim(), 3u);
  EXPECT_EQ(t.entry(3).degree, 2u);
  EXPECT_EQ(t.entry(3).initial, (std::vector<std::uint32_t>{1, 3}));
  const auto v = t.directions(2);
  EXPECT_EQ(v[0], 1u << 31);
  const auto b = lds::generate({SequenceKind::qmc_sobol, 3, 0, 0}, 16, t);
  EXPECT_EQ(b, lds::generate({SequenceKind::qmc_sobol, 3, 0, 0}, 16));
}

TEST(DirectionTable, RejectsMalformedInput) {
  std::istringstream even("2 1 0 2\n");
  EXPECT_EQ(code_of([&] { lds::DirectionTable::parse(even); }), ErrorCode::io);
  std::istringstream gap("3 2 1 1 3\n");
  EXPECT_EQ(code_of([&] { lds::DirectionTable::parse(gap); }), ErrorCode::io);
  std::istringstream big("2 1 0 3\n");
  EXPECT_EQ(code_of([&] { lds::DirectionTable::parse(big); }), ErrorCode::io);
  EXPECT_EQ(code_of([] { lds::DirectionTable::load("/nonexistent/table.txt"); }), ErrorCode::io);
}

TEST(StarDiscrepancy, SinglePointAtCentre) {
  const lds::UniformBatch b(1, 2, {0.5, 0.5});
  EXPECT_DOUBLE_EQ(lds::star_discrepancy_2d(b), 0.75);
  EXPECT_NEAR(oracle::star_discrepancy_scan(b, 200), 0.75, 1e-12);
}

TEST(StarDiscrepancy, AgreesWithScanOracle) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto b = lds::generate({SequenceKind::mc, 2, seed, 0}, 12);
    EXPECT_NEAR(lds::star_discrepancy_2d(b), oracle::star_discrepancy_scan(b, 16), 1e-12);
  }
  const auto s = lds::generate({SequenceKind::qmc_sobol, 2, 0, 0}, 16);
  EXPECT_NEAR(lds::star_discrepancy_2d(s), oracle::star_discrepancy_scan(s, 32), 1e-12);
}

TEST(StarDiscrepancy, SobolBeatsMonteCarlo) {
  const double sobol = lds::star_discrepancy_2d(lds::generate({SequenceKind::qmc_sobol, 2, 0, 0}, 256));
  std::vector<double> mc;
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    mc.push_back(lds::star_discrepancy_2d(lds::generate({SequenceKind::mc, 2, seed, 0}, 256)));
  }
  std::sort(mc.begin(), mc.end());
  EXPECT_LT(sobol, 0.5 * (mc[24] + mc[25]));
  for (double v : mc) EXPECT_GE(v, 1.0 / (2.0 * 256));
}

TEST(StarDiscrepancy, Errors) {
  EXPECT_EQ(code_of([] { lds::star_discrepancy_2d(lds::generate({SequenceKind::mc, 3, 0, 0}, 4)); }),
            ErrorCode::unsupported_dimension);
  EXPECT_EQ(code_of([] { lds::star_discrepancy_2d(lds::generate({SequenceKind::mc, 2, 0, 0}, 513)); }),
            ErrorCode::cost_guard);
}

TEST(SequenceKind, NamesRoundTrip) {
  for (auto kind : {SequenceKind::mc, SequenceKind::qmc_sobol, SequenceKind::rqmc_shift, SequenceKind::rqmc_scramble}) {
    EXPECT_EQ(lds::parse_sequence_kind(lds::to_string(kind)), kind);
  }
  EXPECT_EQ(lds::parse_sequence_kind("qmc-sobol"), SequenceKind::qmc_sobol);
  EXPECT_THROW(lds::parse_sequence_kind("halton"), Error);
}
