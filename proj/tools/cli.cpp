#include "cli.hpp"

#include <omp.h>

#include <CLI11.hpp>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "criteria.hpp"
#include "qmcvi/config.hpp"
#include "qmcvi/diagnostics.hpp"
#include "qmcvi/error.hpp"
#include "qmcvi/optim.hpp"
#include "qmcvi/rng.hpp"
#include "qmcvi/trace_io.hpp"

namespace qmcvi::cli {

namespace {

namespace fs = std::filesystem;
using config::ExperimentConfig;

constexpr std::uint64_t kProbeSalt = 0x50524f42;  // "PROB"

struct FlagSpec {
  const char* flag;
  const char* key;
  const char* help;
  bool boolean = false;
};

const FlagSpec kFlags[] = {
    {"--model", "model", "toy | hlr | poisson"},
    {"--d", "toy.d", "latent dimension of the toy model"},
    {"--groups", "hlr.groups", "hierarchical regression: number of groups I"},
    {"--covariates", "hlr.covariates", "hierarchical regression: covariates k"},
    {"--ethnicities", "poisson.ethnicities", "Poisson model: ethnicity groups E"},
    {"--precincts", "poisson.precincts", "Poisson model: precincts P"},
    {"--data-seed", "data_seed", "seed of the simulated data"},
    {"--fixed-scale", "family.fixed_scale", "optimize the variational means only", true},
    {"--init-mean", "init.mean", "initial variational means"},
    {"--init-log-scale", "init.log_scale", "initial variational log-scales"},
    {"--estimator", "estimator", "reparam | score"},
    {"--entropy", "entropy", "analytic | sampled"},
    {"--seq", "seq", "comma list of mc | qmc | rqmc-shift | rqmc-scramble"},
    {"--n", "n", "comma list of fixed sample sizes"},
    {"--schedule", "schedule", "fixed | geometric"},
    {"--n-min", "schedule.n_min", "geometric schedule: N_min"},
    {"--tau", "schedule.tau", "geometric schedule: growth factor"},
    {"--n-final", "schedule.n_final", "geometric schedule: samples at the last iteration"},
    {"--opt", "opt", "sgd | adam"},
    {"--alpha", "alpha", "step size"},
    {"--beta1", "beta1", "Adam beta1"},
    {"--beta2", "beta2", "Adam beta2"},
    {"--adam-eps", "adam_eps", "Adam epsilon"},
    {"--iters", "iters", "iterations"},
    {"--stop-tol", "stop_tol", "stop when |ELBO_t - ELBO_t-1| <= tol (0: never)"},
    {"--seed", "seed", "master seed"},
    {"--out", "out", "output directory"},
    {"--var-every", "var_every", "gradient-variance probe every k steps (0: off)"},
    {"--resamples", "resamples", "resamples per variance probe"},
    {"--timing", "timing", "record wall-clock time in the trace", true},
    {"--threads", "threads", "OpenMP threads (0: runtime default)"},
};

// Experiment options shared by run, sweep and rates.
struct ExperimentArgs {
  std::string config_file;
  std::vector<std::string> assignments;  // --set key=value
  std::map<std::string, std::string> values;
  std::map<std::string, bool> flags;

  void attach(CLI::App& app, bool with_d = true) {
    app.add_option("--config", config_file, "key = value config file")->check(CLI::ExistingFile);
    for (const auto& f : kFlags) {
      if (!with_d && std::string_view(f.key) == "toy.d") continue;
      if (f.boolean) {
        app.add_flag_function(f.flag, [this, key = f.key](std::int64_t) { flags[key] = true; }, f.help);
      } else {
        app.add_option_function<std::string>(
            f.flag, [this, key = f.key](const std::string& v) { values[key] = v; }, f.help);
      }
    }
    app.add_option("--set", assignments, "additional key=value assignments");
  }

  ExperimentConfig resolve() const {
    ExperimentConfig cfg = config_file.empty() ? ExperimentConfig{} : config::load(config_file);
    for (const auto& f : kFlags) {
      if (auto it = values.find(f.key); it != values.end()) config::set(cfg, f.key, it->second);
      if (flags.count(f.key)) config::set(cfg, f.key, "true");
    }
    for (const auto& a : assignments) {
      const auto eq = a.find('=');
      if (eq == std::string::npos) throw Error(ErrorCode::invalid_config, "--set expects key=value, got '" + a + "'");
      config::set(cfg, a.substr(0, eq), a.substr(eq + 1));
    }
    config::validate(cfg);
    if (cfg.threads > 0) omp_set_num_threads(cfg.threads);
    return cfg;
  }
};

std::string num(double v, const char* pattern = "%.6g") {
  char buf[64];
  std::snprintf(buf, sizeof buf, pattern, v);
  return buf;
}

optim::RunResult execute(const ExperimentConfig& cfg, lds::SequenceKind kind, std::size_t n) {
  const auto model = config::build_model(cfg);
  const auto spec = config::build_family(cfg, *model);
  const auto schedule = config::build_schedule(cfg, n);
  optim::RunOptions ro;
  ro.master_seed = cfg.seed;
  ro.estimator.entropy = cfg.entropy;
  if (cfg.variance_every > 0) {
    ro.probe = [&, kind](std::size_t t, const families::VarParams& lambda) -> std::optional<double> {
      if (t % cfg.variance_every != 0) return std::nullopt;
      return diagnostics::grad_variance(*model, spec, lambda, cfg.estimator, kind, schedule.at(t), cfg.resamples,
                                        derive_seed(cfg.seed, kProbeSalt, t), ro.estimator)
          .trace_of_variance;
    };
  }
  return optim::run(*model, spec, config::initial_params(cfg, spec), cfg.estimator, kind, cfg.optim, schedule, ro);
}

std::string cell_name(const ExperimentConfig& cfg) {
  std::string name(lds::to_string(cfg.sequences.front()));
  if (cfg.schedule == config::ScheduleKind::fixed) name += "-n" + std::to_string(cfg.sample_sizes.front());
  return name;
}

// Writes <name>.csv and <name>.manifest; returns a one-line summary.
std::string write_run(const ExperimentConfig& cell, const optim::RunResult& res, const std::string& name) {
  const fs::path dir(cell.output);
  trace_io::write_trace(dir / (name + ".csv"), res, cell.timing);
  trace_io::write_manifest(dir / (name + ".manifest"), cell, res);
  std::string line = (dir / (name + ".csv")).string() + ": " + std::to_string(res.trace.size()) + " iterations";
  if (!res.trace.empty()) line += ", last ELBO estimate " + num(res.trace.back().elbo);
  if (res.aborted) line += ", aborted: " + res.diagnostic;
  return line;
}

int cmd_run(const ExperimentArgs& args, std::ostream& out, std::ostream& err) {
  const auto cfg = args.resolve();
  if (cfg.sequences.size() != 1 ||
      (cfg.schedule == config::ScheduleKind::fixed && cfg.sample_sizes.size() != 1)) {
    throw Error(ErrorCode::invalid_config, "run takes one --seq and one --n; use sweep for lists");
  }
  const auto res = execute(cfg, cfg.sequences.front(), cfg.sample_sizes.front());
  for (const auto& w : res.warnings) err << "qmcvi: warning: " << w << '\n';
  out << write_run(cfg, res, "trace") << '\n';
  return res.aborted ? 3 : 0;
}

int cmd_sweep(const ExperimentArgs& args, std::ostream& out, std::ostream& err) {
  const auto cfg = args.resolve();
  std::vector<ExperimentConfig> cells;
  const std::vector<std::size_t> sizes =
      cfg.schedule == config::ScheduleKind::fixed ? cfg.sample_sizes : std::vector<std::size_t>{cfg.n_min};
  for (auto kind : cfg.sequences) {
    for (auto n : sizes) {
      ExperimentConfig cell = cfg;
      cell.sequences = {kind};
      cell.sample_sizes = {n};
      cells.push_back(std::move(cell));
    }
  }
  std::vector<std::string> lines(cells.size());
  std::vector<std::vector<std::string>> warnings(cells.size());
  std::vector<char> aborted(cells.size(), 0);
  kernels::for_each_index(cells.size(), ExecPolicy::parallel, [&](std::size_t c) {
    const auto res = execute(cells[c], cells[c].sequences.front(), cells[c].sample_sizes.front());
    lines[c] = write_run(cells[c], res, cell_name(cells[c]));
    warnings[c] = res.warnings;
    aborted[c] = res.aborted;
  });
  int code = 0;
  for (std::size_t c = 0; c < cells.size(); ++c) {
    for (const auto& w : warnings[c]) err << "qmcvi: warning: " << cell_name(cells[c]) << ": " << w << '\n';
    out << lines[c] << '\n';
    if (aborted[c]) code = 3;
  }
  return code;
}

struct RatesArgs {
  std::string target = "integration";
  std::size_t dim = 4;
  unsigned min_log2 = 4;
  std::optional<unsigned> max_log2;
  std::optional<std::size_t> reps;
};

void print_fit(std::ostream& out, std::string_view label, const std::vector<diagnostics::RatePoint>& pts) {
  out << "fit " << label << ": ";
  try {
    const auto fit = diagnostics::rate_fit(pts);
    out << "slope " << num(fit.slope, "%.4f") << ", intercept " << num(fit.intercept, "%.4f") << ", R^2 "
        << num(fit.r_squared, "%.4f") << '\n';
  } catch (const Error& e) {
    out << "n/a (" << e.what() << ")\n";
  }
}

int cmd_rates(const ExperimentArgs& args, const RatesArgs& rates, bool sequences_given, std::ostream& out) {
  auto cfg = args.resolve();
  if (rates.min_log2 < 1 || rates.min_log2 > 30) throw Error(ErrorCode::invalid_config, "--min-log2 out of range");
  std::ostringstream csv;
  if (rates.target == "integration") {
    const unsigned hi = rates.max_log2.value_or(12);
    const std::size_t reps = rates.reps.value_or(100);
    if (hi < rates.min_log2 || hi > 24) throw Error(ErrorCode::invalid_config, "--max-log2 out of range");
    if (!sequences_given) {
      cfg.sequences = {lds::SequenceKind::mc, lds::SequenceKind::qmc_sobol, lds::SequenceKind::rqmc_shift,
                       lds::SequenceKind::rqmc_scramble};
    }
    csv << "seq,n,randomizations,mean,variance,rmse\n";
    out << "integration of prod_j (1 + 0.3 (u_j - 0.5)) over [0,1]^" << rates.dim << ", " << reps
        << " randomizations\n";
    for (auto kind : cfg.sequences) {
      std::vector<diagnostics::RatePoint> var, sq;
      for (unsigned m = rates.min_log2; m <= hi; ++m) {
        const std::size_t n = std::size_t{1} << m;
        const auto pt = diagnostics::integration_point(kind, rates.dim, n, reps, derive_seed(cfg.seed, m));
        csv << lds::to_string(kind) << ',' << n << ',' << pt.randomizations << ','
            << config::format_double(pt.mean_estimate) << ',' << config::format_double(pt.variance) << ','
            << config::format_double(pt.rmse) << '\n';
        out << "  " << lds::to_string(kind) << " N=" << n << " variance " << num(pt.variance) << " rmse "
            << num(pt.rmse) << '\n';
        var.push_back({double(n), pt.variance});
        sq.push_back({double(n), pt.rmse * pt.rmse});
      }
      if (kind == lds::SequenceKind::qmc_sobol) {
        print_fit(out, std::string(lds::to_string(kind)) + " squared error", sq);
      } else {
        print_fit(out, std::string(lds::to_string(kind)) + " variance", var);
      }
    }
    trace_io::write_text(fs::path(cfg.output) / "rates-integration.csv", csv.str());
  } else if (rates.target == "gradient") {
    const unsigned hi = rates.max_log2.value_or(10);
    const std::size_t reps = rates.reps.value_or(cfg.resamples);
    if (hi < rates.min_log2 || hi > 20) throw Error(ErrorCode::invalid_config, "--max-log2 out of range");
    if (!sequences_given) cfg.sequences = {lds::SequenceKind::mc, lds::SequenceKind::rqmc_scramble};
    const auto model = config::build_model(cfg);
    const auto spec = config::build_family(cfg, *model);
    const auto lambda = config::initial_params(cfg, spec);
    estimators::EstimatorOptions eo;
    eo.entropy = cfg.entropy;
    csv << "seq,n,resamples,trvar\n";
    out << "tr Var of the " << estimators::to_string(cfg.estimator) << " gradient on " << model->name() << " (d_z="
        << model->latent_dim() << "), " << reps << " resamples\n";
    for (auto kind : cfg.sequences) {
      std::vector<diagnostics::RatePoint> pts;
      for (unsigned m = rates.min_log2; m <= hi; ++m) {
        const std::size_t n = std::size_t{1} << m;
        const auto rep = diagnostics::grad_variance(*model, spec, lambda, cfg.estimator, kind, n, reps,
                                                    derive_seed(cfg.seed, m), eo);
        csv << lds::to_string(kind) << ',' << n << ',' << reps << ',' << config::format_double(rep.trace_of_variance)
            << '\n';
        out << "  " << lds::to_string(kind) << " N=" << n << " trVar " << num(rep.trace_of_variance) << '\n';
        pts.push_back({double(n), rep.trace_of_variance});
      }
      print_fit(out, std::string(lds::to_string(kind)) + " trVar", pts);
    }
    trace_io::write_text(fs::path(cfg.output) / "rates-gradient.csv", csv.str());
  } else {
    throw Error(ErrorCode::invalid_config, "--target must be integration or gradient");
  }
  return 0;
}

struct SelftestArgs {
  std::uint64_t seed = acceptance::Options{}.seed;
  std::string out = "qmcvi-selftest";
  std::vector<int> only;
  bool quick = false;
};

int cmd_selftest(const SelftestArgs& args, std::ostream& out) {
  acceptance::Options o;
  o.seed = args.seed;
  o.out = args.out;
  o.quick = args.quick;
  std::size_t failed = 0, total = 0;
  acceptance::run_all(o, args.only, [&](const acceptance::Result& r) {
    ++total;
    if (!(r.pass && r.within_time)) ++failed;
    out << acceptance::format(r) << std::endl;
  });
  out << (total - failed) << "/" << total << " criteria passed\n";
  return failed == 0 ? 0 : 1;
}

}  // namespace

int main(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Quasi-Monte Carlo variational inference experiments"};
  app.set_version_flag("--version", std::string("qmcvi ") + QMCVI_VERSION_STRING);
  app.require_subcommand(1);

  ExperimentArgs run_args, sweep_args, rates_args;
  auto* run = app.add_subcommand("run", "single optimization run; writes trace.csv and trace.manifest");
  run_args.attach(*run);
  auto* sweep = app.add_subcommand("sweep", "runs every sequence kind x sample size; one CSV per cell");
  sweep_args.attach(*sweep);

  RatesArgs rates;
  auto* rates_cmd = app.add_subcommand("rates", "variance-rate study for integration or gradients");
  rates_args.attach(*rates_cmd, false);
  rates_cmd->add_option("--target", rates.target, "integration | gradient")
      ->check(CLI::IsMember({"integration", "gradient"}));
  rates_cmd->add_option_function<std::size_t>(
      "--d",
      [&](std::size_t d) {
        rates.dim = d;
        rates_args.values["toy.d"] = std::to_string(d);
      },
      "integration dimension / toy model dimension");
  rates_cmd->add_option("--min-log2", rates.min_log2, "smallest N = 2^k");
  rates_cmd->add_option_function<unsigned>("--max-log2", [&](unsigned v) { rates.max_log2 = v; }, "largest N = 2^k");
  rates_cmd->add_option_function<std::size_t>(
      "--reps", [&](std::size_t v) { rates.reps = v; }, "randomizations (integration) or resamples (gradient)");

  SelftestArgs self;
  auto* selftest = app.add_subcommand("selftest", "runs the acceptance suite");
  selftest->add_option("--seed", self.seed, "master seed");
  selftest->add_option("--out", self.out, "directory for the criterion CSV files");
  selftest->add_option("--only", self.only, "criterion ids to run")->delimiter(',');
  selftest->add_flag("--quick", self.quick, "reduced problem sizes (thresholds not meaningful)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e, out, err);
    err << "qmcvi: error: " << e.what() << '\n';
    return 2;
  }

  try {
    if (run->parsed()) return cmd_run(run_args, out, err);
    if (sweep->parsed()) return cmd_sweep(sweep_args, out, err);
    if (rates_cmd->parsed()) return cmd_rates(rates_args, rates, rates_args.values.count("seq") > 0, out);
    return cmd_selftest(self, out);
  } catch (const std::exception& e) {
    std::string msg = e.what();
    for (auto& c : msg) {
      if (c == '\n') c = ' ';
    }
    err << "qmcvi: error: " << msg << '\n';
    return 2;
  }
}

}  // namespace qmcvi::cli
