#include <gtest/gtest.h>

#include <numeric>
#include <stdexcept>

#include <omp.h>

#include "qmcvi/exec.hpp"

using namespace qmcvi;
using namespace qmcvi::kernels;

TEST(PairwiseSum, Values) {
  EXPECT_EQ(pairwise_sum({}), 0.0);
  std::vector<double> v(1000);
  std::iota(v.begin(), v.end(), 1.0);
  EXPECT_EQ(pairwise_sum(v), 500500.0);
  // 1 followed by many tiny terms: naive summation loses them all.
  std::vector<double> w(1 << 20, 1e-16);
  w[0] = 1.0;
  EXPECT_NEAR(pairwise_sum(w), 1.0 + (w.size() - 1) * 1e-16, 1e-15);
}

TEST(ChunkedSum, MatchesReferenceForAllSizes) {
  for (std::size_t n : {0u, 1u, 63u, 64u, 65u, 200u, 1000u}) {
    auto body = [](std::size_t b, std::size_t e, std::span<double> acc) {
      for (std::size_t i = b; i < e; ++i) {
        acc[0] += 1.0;
        acc[1] += static_cast<double>(i);
      }
    };
    const auto par = chunked_sum(n, 2, ExecPolicy::parallel, body);
    const auto ref = chunked_sum(n, 2, ExecPolicy::reference, body);
    EXPECT_EQ(par, ref) << n;
    EXPECT_EQ(par[0], static_cast<double>(n));
  }
}

TEST(ChunkedSum, IndependentOfThreadCount) {
  auto body = [](std::size_t b, std::size_t e, std::span<double> acc) {
    for (std::size_t i = b; i < e; ++i) acc[0] += 1.0 / (1.0 + static_cast<double>(i) * 0.37);
  };
  const int saved = omp_get_max_threads();
  omp_set_num_threads(1);
  const auto base = chunked_sum(10007, 1, ExecPolicy::parallel, body);
  for (int t : {2, 4, 5}) {
    omp_set_num_threads(t);
    EXPECT_EQ(chunked_sum(10007, 1, ExecPolicy::parallel, body), base) << t;
  }
  omp_set_num_threads(saved);
}

TEST(ChunkedSum, PropagatesExceptions) {
  auto body = [](std::size_t b, std::size_t e, std::span<double>) {
    if (b <= 500 && 500 < e) throw std::runtime_error("boom");
  };
  EXPECT_THROW(chunked_sum(1000, 1, ExecPolicy::parallel, body), std::runtime_error);
  EXPECT_THROW(chunked_sum(1000, 1, ExecPolicy::reference, body), std::runtime_error);
}

TEST(ForEachIndex, VisitsEveryIndexOnce) {
  for (auto exec : {ExecPolicy::reference, ExecPolicy::parallel}) {
    std::vector<int> hits(777, 0);
    for_each_index(hits.size(), exec, [&](std::size_t i) { hits[i] += 1; });
    EXPECT_EQ(std::count(hits.begin(), hits.end(), 1), 777);
  }
  EXPECT_THROW(for_each_index(10, ExecPolicy::parallel,
                              [](std::size_t i) {
                                if (i == 7) throw std::logic_error("x");
                              }),
               std::logic_error);
}
