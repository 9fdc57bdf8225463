#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace qmcvi {

enum class ErrorCode {
  unsupported_dimension,
  empty_request,
  cost_guard,
  domain,
  shape,
  decomposition,
  support_violation,
  non_finite,
  invalid_config,
  io,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

// Raised by cholesky(); pivot() is the zero-based row whose pivot was not positive.
class DecompositionError : public Error {
 public:
  DecompositionError(std::size_t pivot, const std::string& what)
      : Error(ErrorCode::decomposition, what), pivot_(pivot) {}

  std::size_t pivot() const noexcept { return pivot_; }

 private:
  std::size_t pivot_;
};

}  // namespace qmcvi
