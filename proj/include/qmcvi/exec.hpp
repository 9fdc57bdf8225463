#pragma once

// Execution policies shared by the sample-parallel kernels.
//
// `reference` runs the plain serial loop and is kept for testing and
// benchmarking. `parallel` splits the index range into fixed-size chunks,
// evaluates chunks with OpenMP, and combines chunk partials with a pairwise
// tree in chunk order. The chunking does not depend on the thread count, so
// parallel results are bit-identical for any number of threads.

#include <algorithm>
#include <cstddef>
#include <exception>
#include <span>
#include <vector>

#include <omp.h>

namespace qmcvi {

enum class ExecPolicy { reference, parallel };

namespace kernels {

inline constexpr std::size_t kChunkSize = 64;

// Collects the first exception thrown inside a parallel region.
class ExceptionSink {
 public:
  template <class Fn>
  void run(Fn&& fn) noexcept {
    try {
      fn();
    } catch (...) {
#pragma omp critical(qmcvi_exception_sink)
      if (!error_) error_ = std::current_exception();
    }
  }

  void rethrow() const {
    if (error_) std::rethrow_exception(error_);
  }

 private:
  std::exception_ptr error_;
};

// Sums `width`-wide contributions over samples [0, n). body(begin, end, acc)
// must add the contributions of samples [begin, end) into acc (zeroed on entry).
template <class Body>
std::vector<double> chunked_sum(std::size_t n, std::size_t width, ExecPolicy exec, Body&& body) {
  if (exec == ExecPolicy::reference || n == 0) {
    std::vector<double> acc(width, 0.0);
    body(std::size_t{0}, n, std::span<double>(acc));
    return acc;
  }
  const std::size_t chunks = (n + kChunkSize - 1) / kChunkSize;
  std::vector<double> partial(chunks * width, 0.0);
  ExceptionSink sink;
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t c = 0; c < static_cast<std::ptrdiff_t>(chunks); ++c) {
    const auto cu = static_cast<std::size_t>(c);
    sink.run([&] {
      body(cu * kChunkSize, std::min(n, (cu + 1) * kChunkSize),
           std::span<double>(partial.data() + cu * width, width));
    });
  }
  sink.rethrow();
  for (std::size_t stride = 1; stride < chunks; stride *= 2) {
    for (std::size_t c = 0; c + stride < chunks; c += 2 * stride) {
      double* dst = partial.data() + c * width;
      const double* src = partial.data() + (c + stride) * width;
      for (std::size_t k = 0; k < width; ++k) dst[k] += src[k];
    }
  }
  partial.resize(width);
  return partial;
}

// Runs fn(i) for i in [0, n); iterations must be independent.
template <class Fn>
void for_each_index(std::size_t n, ExecPolicy exec, Fn&& fn) {
  if (exec == ExecPolicy::reference) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  ExceptionSink sink;
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(n); ++i) {
    sink.run([&] { fn(static_cast<std::size_t>(i)); });
  }
  sink.rethrow();
}

// Pairwise sum in index order, independent of threading.
double pairwise_sum(std::span<const double> values) noexcept;

}  // namespace kernels
}  // namespace qmcvi
