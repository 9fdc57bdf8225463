#pragma once

// Experiment configuration: a flat `key = value` text format, one key per
// line, `#` starts a comment. Every key can also be set from the command line.
//
//   model               toy | hlr | poisson
//   toy.d               latent dimension of the toy target
//   hlr.groups          I (number of regression groups)
//   hlr.covariates      k (covariates per group)
//   poisson.ethnicities E
//   poisson.precincts   P
//   data_seed           seed of the simulated data
//   family.fixed_scale  true: only means are optimized
//   init.mean           initial variational means
//   init.log_scale      initial variational log-scales
//   estimator           reparam | score
//   entropy             analytic | sampled
//   seq                 comma list of mc | qmc | rqmc-shift | rqmc-scramble
//   n                   comma list of fixed sample sizes
//   schedule            fixed | geometric
//   schedule.n_min      N_min of the geometric schedule
//   schedule.tau        growth factor (0: derive from schedule.n_final)
//   schedule.n_final    samples at the last iteration when tau = 0
//   opt                 sgd | adam
//   alpha, beta1, beta2, adam_eps, iters, stop_tol
//   seed                master seed
//   out                 output directory
//   var_every           gradient-variance probe every k steps (0 = off)
//   resamples           resamples per variance probe
//   timing              record wall-clock nanoseconds (makes traces non-reproducible)
//   threads             OpenMP threads (0 = runtime default)

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "qmcvi/optim.hpp"

namespace qmcvi::config {

enum class ModelKind { toy, hlr, poisson };
enum class ScheduleKind { fixed, geometric };

std::string_view to_string(ModelKind kind) noexcept;

struct ExperimentConfig {
  ModelKind model = ModelKind::toy;
  std::size_t toy_dim = 2;
  std::size_t hlr_groups = 100;
  std::size_t hlr_covariates = 10;
  std::size_t poisson_ethnicities = 4;
  std::size_t poisson_precincts = 30;
  std::uint64_t data_seed = 1;

  bool fixed_scale = false;
  double init_mean = 0.1;
  double init_log_scale = 0.0;

  estimators::EstimatorKind estimator = estimators::EstimatorKind::reparam;
  estimators::EntropyMode entropy = estimators::EntropyMode::analytic;
  std::vector<lds::SequenceKind> sequences{lds::SequenceKind::rqmc_scramble};
  std::vector<std::size_t> sample_sizes{10};

  ScheduleKind schedule = ScheduleKind::fixed;
  std::size_t n_min = 16;
  double tau = 0.0;
  std::size_t n_final = 0;

  optim::OptimConfig optim{};
  std::uint64_t seed = 0;
  std::string output = "qmcvi-out";
  std::size_t variance_every = 0;
  std::size_t resamples = 1000;
  bool timing = false;
  int threads = 0;

  bool operator==(const ExperimentConfig&) const = default;
};

// All recognised keys in serialization order.
const std::vector<std::string_view>& keys();

// Sets one key from its text form. Throws Error(invalid_config) for an unknown
// key or a malformed value.
void set(ExperimentConfig& config, std::string_view key, std::string_view value);

std::string get(const ExperimentConfig& config, std::string_view key);

ExperimentConfig parse(std::istream& in);
ExperimentConfig load(const std::string& path);
std::string serialize(const ExperimentConfig& config);

// Cross-checks that every referenced component can be built.
void validate(const ExperimentConfig& config);

std::unique_ptr<models::Model> build_model(const ExperimentConfig& config);
families::FamilySpec build_family(const ExperimentConfig& config, const models::Model& model);
families::VarParams initial_params(const ExperimentConfig& config, const families::FamilySpec& spec);
optim::SampleSchedule build_schedule(const ExperimentConfig& config, std::size_t n);

// Shortest round-trip-safe decimal text ("%.17g"); nan/inf spelled out.
std::string format_double(double v);

}  // namespace qmcvi::config
