#pragma once

// Optimization drivers: fixed-step SGD, Adam, and SGD with an increasing
// sample schedule N_t = N_min + ceil(tau^t). All drivers ascend the ELBO.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "qmcvi/estimators.hpp"

namespace qmcvi::optim {

enum class Algorithm { sgd, adam };

std::string_view to_string(Algorithm a) noexcept;
Algorithm parse_algorithm(std::string_view name);

struct OptimConfig {
  Algorithm algorithm = Algorithm::sgd;
  double step_size = 0.1;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::size_t max_iters = 1000;
  // Stop once |ELBO_t - ELBO_{t-1}| <= stop_tol; 0 runs to max_iters.
  double stop_tol = 0.0;

  // Throws Error(invalid_config).
  void validate() const;

  bool operator==(const OptimConfig&) const = default;
};

class SampleSchedule {
 public:
  enum class Kind { fixed, geometric };

  static SampleSchedule fixed(std::size_t n);
  static SampleSchedule geometric(std::size_t n_min, double tau);
  // Geometric schedule whose last iteration (t = iters - 1) uses about n_final samples.
  static SampleSchedule geometric_reaching(std::size_t n_min, std::size_t n_final, std::size_t iters);

  Kind kind() const noexcept { return kind_; }
  std::size_t n_fixed() const noexcept { return n_; }
  std::size_t n_min() const noexcept { return n_; }
  double tau() const noexcept { return tau_; }

  // Samples used at iteration t (0-based).
  std::size_t at(std::size_t t) const;

  bool operator==(const SampleSchedule&) const = default;

 private:
  SampleSchedule(Kind kind, std::size_t n, double tau) : kind_(kind), n_(n), tau_(tau) {}

  Kind kind_;
  std::size_t n_;
  double tau_;
};

struct TraceRecord {
  std::size_t t = 0;
  std::size_t n_samples = 0;
  double elbo = 0.0;  // estimate from the step's own batch
  double grad_norm = 0.0;
  std::optional<double> trace_variance;
  std::int64_t wall_ns = 0;
  std::optional<std::vector<double>> snapshot;  // lambda_t before the update
};

struct AdamState {
  std::vector<double> first_moment;
  std::vector<double> second_moment;
  std::size_t steps = 0;

  explicit AdamState(std::size_t dim = 0) : first_moment(dim, 0.0), second_moment(dim, 0.0) {}
};

// lambda += alpha * m_hat / (sqrt(v_hat) + eps) with bias-corrected moments.
void adam_step(AdamState& state, std::span<double> lambda, std::span<const double> grad, double alpha, double beta1,
               double beta2, double epsilon);

// lambda += alpha * grad.
void sgd_step(std::span<double> lambda, std::span<const double> grad, double alpha);

// Seed of the uniform batch drawn at iteration t.
std::uint64_t step_seed(std::uint64_t master_seed, std::size_t t) noexcept;

struct RunOptions {
  std::uint64_t master_seed = 0;
  estimators::EstimatorOptions estimator;
  // Store lambda_t in every k-th record (0 = never).
  std::size_t snapshot_every = 0;
  // Optional per-iteration measurement (e.g. gradient variance); returns the trvar column.
  std::function<std::optional<double>(std::size_t t, const families::VarParams&)> probe;
};

struct RunResult {
  std::vector<TraceRecord> trace;
  families::VarParams final_params;
  bool aborted = false;
  std::string diagnostic;
  std::uint64_t total_samples = 0;
  std::vector<std::string> warnings;
};

RunResult run(const models::Model& model, const families::FamilySpec& spec, families::VarParams initial,
              estimators::EstimatorKind estimator, lds::SequenceKind sequence, const OptimConfig& config,
              const SampleSchedule& schedule, const RunOptions& options = {});

}  // namespace qmcvi::optim
