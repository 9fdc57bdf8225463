#include "qmcvi/config.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <istream>
#include <map>
#include <sstream>

#include "qmcvi/error.hpp"

namespace qmcvi::config {

namespace {

[[noreturn]] void bad_value(std::string_view key, std::string_view value, std::string_view expected) {
  throw Error(ErrorCode::invalid_config,
              "config key '" + std::string(key) + "': cannot read '" + std::string(value) + "' as " +
                  std::string(expected));
}

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::uint64_t to_u64(std::string_view key, std::string_view value) {
  std::uint64_t out = 0;
  int base = 10;
  std::string_view digits = value;
  if (digits.size() > 2 && digits[0] == '0' && (digits[1] == 'x' || digits[1] == 'X')) {
    base = 16;
    digits.remove_prefix(2);
  }
  const auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), out, base);
  if (ec != std::errc{} || ptr != digits.data() + digits.size() || digits.empty()) {
    bad_value(key, value, "a non-negative integer");
  }
  return out;
}

std::size_t to_size(std::string_view key, std::string_view value) {
  return static_cast<std::size_t>(to_u64(key, value));
}

double to_double(std::string_view key, std::string_view value) {
  const std::string text(value);
  char* end = nullptr;
  const double v = std::strtod(text.c_str(), &end);
  if (text.empty() || end != text.c_str() + text.size()) bad_value(key, value, "a number");
  return v;
}

bool to_bool(std::string_view key, std::string_view value) {
  if (value == "true" || value == "1" || value == "yes" || value == "on") return true;
  if (value == "false" || value == "0" || value == "no" || value == "off") return false;
  bad_value(key, value, "a boolean");
}

std::vector<std::string_view> split_list(std::string_view value) {
  std::vector<std::string_view> out;
  while (true) {
    const auto comma = value.find(',');
    out.push_back(trim(value.substr(0, comma)));
    if (comma == std::string_view::npos) break;
    value.remove_prefix(comma + 1);
  }
  return out;
}

template <class T, class F>
std::string join(const std::vector<T>& items, F&& fmt) {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (i) out += ',';
    out += fmt(items[i]);
  }
  return out;
}

struct Field {
  std::function<void(ExperimentConfig&, std::string_view key, std::string_view value)> set;
  std::function<std::string(const ExperimentConfig&)> get;
};

template <class M>
Field size_field(M member) {
  return {[member](ExperimentConfig& c, std::string_view k, std::string_view v) { c.*member = to_size(k, v); },
          [member](const ExperimentConfig& c) { return std::to_string(c.*member); }};
}

template <class M>
Field double_field(M member) {
  return {[member](ExperimentConfig& c, std::string_view k, std::string_view v) { c.*member = to_double(k, v); },
          [member](const ExperimentConfig& c) { return format_double(c.*member); }};
}

template <class M>
Field bool_field(M member) {
  return {[member](ExperimentConfig& c, std::string_view k, std::string_view v) { c.*member = to_bool(k, v); },
          [member](const ExperimentConfig& c) { return std::string(c.*member ? "true" : "false"); }};
}

ModelKind parse_model(std::string_view name) {
  if (name == "toy") return ModelKind::toy;
  if (name == "hlr") return ModelKind::hlr;
  if (name == "poisson") return ModelKind::poisson;
  throw Error(ErrorCode::invalid_config, "unknown model '" + std::string(name) + "' (expected toy, hlr or poisson)");
}

estimators::EntropyMode parse_entropy(std::string_view name) {
  if (name == "analytic") return estimators::EntropyMode::analytic;
  if (name == "sampled") return estimators::EntropyMode::sampled;
  throw Error(ErrorCode::invalid_config, "unknown entropy mode '" + std::string(name) + "'");
}

ScheduleKind parse_schedule(std::string_view name) {
  if (name == "fixed") return ScheduleKind::fixed;
  if (name == "geometric") return ScheduleKind::geometric;
  throw Error(ErrorCode::invalid_config, "unknown schedule '" + std::string(name) + "'");
}

// Enum parsers elsewhere throw other codes for bad names; normalise them.
template <class F>
auto as_config_error(F&& f) {
  try {
    return f();
  } catch (const Error& e) {
    if (e.code() == ErrorCode::invalid_config) throw;
    throw Error(ErrorCode::invalid_config, e.what());
  }
}

const std::vector<std::pair<std::string_view, Field>>& fields() {
  using C = ExperimentConfig;
  static const std::vector<std::pair<std::string_view, Field>> table = {
      {"model",
       {[](C& c, std::string_view, std::string_view v) { c.model = parse_model(v); },
        [](const C& c) { return std::string(to_string(c.model)); }}},
      {"toy.d", size_field(&C::toy_dim)},
      {"hlr.groups", size_field(&C::hlr_groups)},
      {"hlr.covariates", size_field(&C::hlr_covariates)},
      {"poisson.ethnicities", size_field(&C::poisson_ethnicities)},
      {"poisson.precincts", size_field(&C::poisson_precincts)},
      {"data_seed",
       {[](C& c, std::string_view k, std::string_view v) { c.data_seed = to_u64(k, v); },
        [](const C& c) { return std::to_string(c.data_seed); }}},
      {"family.fixed_scale", bool_field(&C::fixed_scale)},
      {"init.mean", double_field(&C::init_mean)},
      {"init.log_scale", double_field(&C::init_log_scale)},
      {"estimator",
       {[](C& c, std::string_view, std::string_view v) {
          c.estimator = as_config_error([&] { return estimators::parse_estimator_kind(v); });
        },
        [](const C& c) { return std::string(estimators::to_string(c.estimator)); }}},
      {"entropy",
       {[](C& c, std::string_view, std::string_view v) { c.entropy = parse_entropy(v); },
        [](const C& c) {
          return std::string(c.entropy == estimators::EntropyMode::analytic ? "analytic" : "sampled");
        }}},
      {"seq",
       {[](C& c, std::string_view, std::string_view v) {
          std::vector<lds::SequenceKind> kinds;
          for (auto item : split_list(v)) {
            kinds.push_back(as_config_error([&] { return lds::parse_sequence_kind(item); }));
          }
          c.sequences = std::move(kinds);
        },
        [](const C& c) {
          return join(c.sequences, [](lds::SequenceKind k) { return std::string(lds::to_string(k)); });
        }}},
      {"n",
       {[](C& c, std::string_view k, std::string_view v) {
          std::vector<std::size_t> sizes;
          for (auto item : split_list(v)) sizes.push_back(to_size(k, item));
          c.sample_sizes = std::move(sizes);
        },
        [](const C& c) { return join(c.sample_sizes, [](std::size_t n) { return std::to_string(n); }); }}},
      {"schedule",
       {[](C& c, std::string_view, std::string_view v) { c.schedule = parse_schedule(v); },
        [](const C& c) { return std::string(c.schedule == ScheduleKind::fixed ? "fixed" : "geometric"); }}},
      {"schedule.n_min", size_field(&C::n_min)},
      {"schedule.tau", double_field(&C::tau)},
      {"schedule.n_final", size_field(&C::n_final)},
      {"opt",
       {[](C& c, std::string_view, std::string_view v) { c.optim.algorithm = optim::parse_algorithm(v); },
        [](const C& c) { return std::string(optim::to_string(c.optim.algorithm)); }}},
      {"alpha",
       {[](C& c, std::string_view k, std::string_view v) { c.optim.step_size = to_double(k, v); },
        [](const C& c) { return format_double(c.optim.step_size); }}},
      {"beta1",
       {[](C& c, std::string_view k, std::string_view v) { c.optim.beta1 = to_double(k, v); },
        [](const C& c) { return format_double(c.optim.beta1); }}},
      {"beta2",
       {[](C& c, std::string_view k, std::string_view v) { c.optim.beta2 = to_double(k, v); },
        [](const C& c) { return format_double(c.optim.beta2); }}},
      {"adam_eps",
       {[](C& c, std::string_view k, std::string_view v) { c.optim.epsilon = to_double(k, v); },
        [](const C& c) { return format_double(c.optim.epsilon); }}},
      {"iters",
       {[](C& c, std::string_view k, std::string_view v) { c.optim.max_iters = to_size(k, v); },
        [](const C& c) { return std::to_string(c.optim.max_iters); }}},
      {"stop_tol",
       {[](C& c, std::string_view k, std::string_view v) { c.optim.stop_tol = to_double(k, v); },
        [](const C& c) { return format_double(c.optim.stop_tol); }}},
      {"seed",
       {[](C& c, std::string_view k, std::string_view v) { c.seed = to_u64(k, v); },
        [](const C& c) { return std::to_string(c.seed); }}},
      {"out",
       {[](C& c, std::string_view, std::string_view v) { c.output = std::string(v); },
        [](const C& c) { return c.output; }}},
      {"var_every", size_field(&C::variance_every)},
      {"resamples", size_field(&C::resamples)},
      {"timing", bool_field(&C::timing)},
      {"threads",
       {[](C& c, std::string_view k, std::string_view v) {
          const auto n = to_u64(k, v);
          if (n > 4096) bad_value(k, v, "a thread count <= 4096");
          c.threads = static_cast<int>(n);
        },
        [](const C& c) { return std::to_string(c.threads); }}},
  };
  return table;
}

const Field& field(std::string_view key) {
  for (const auto& [name, f] : fields()) {
    if (name == key) return f;
  }
  throw Error(ErrorCode::invalid_config, "unknown config key '" + std::string(key) + "'");
}

}  // namespace

std::string_view to_string(ModelKind kind) noexcept {
  switch (kind) {
    case ModelKind::toy: return "toy";
    case ModelKind::hlr: return "hlr";
    case ModelKind::poisson: return "poisson";
  }
  return "?";
}

const std::vector<std::string_view>& keys() {
  static const std::vector<std::string_view> names = [] {
    std::vector<std::string_view> out;
    for (const auto& entry : fields()) out.push_back(entry.first);
    return out;
  }();
  return names;
}

void set(ExperimentConfig& config, std::string_view key, std::string_view value) {
  field(key).set(config, key, trim(value));
}

std::string get(const ExperimentConfig& config, std::string_view key) { return field(key).get(config); }

ExperimentConfig parse(std::istream& in) {
  ExperimentConfig config;
  std::map<std::string, std::size_t, std::less<>> seen;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view view(line);
    if (const auto hash = view.find('#'); hash != std::string_view::npos) view = view.substr(0, hash);
    view = trim(view);
    if (view.empty()) continue;
    const auto eq = view.find('=');
    if (eq == std::string_view::npos) {
      throw Error(ErrorCode::invalid_config, "config line " + std::to_string(line_no) + ": expected 'key = value'");
    }
    const std::string key(trim(view.substr(0, eq)));
    if (auto it = seen.find(key); it != seen.end()) {
      throw Error(ErrorCode::invalid_config, "config line " + std::to_string(line_no) + ": key '" + key +
                                                 "' already set on line " + std::to_string(it->second));
    }
    seen.emplace(key, line_no);
    set(config, key, view.substr(eq + 1));
  }
  return config;
}

ExperimentConfig load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::io, "cannot open config file '" + path + "'");
  return parse(in);
}

std::string serialize(const ExperimentConfig& config) {
  std::string out;
  for (const auto& [name, f] : fields()) {
    out += name;
    out += " = ";
    out += f.get(config);
    out += '\n';
  }
  return out;
}

void validate(const ExperimentConfig& config) {
  config.optim.validate();
  if (config.sequences.empty()) throw Error(ErrorCode::invalid_config, "seq must list at least one sequence");
  if (config.schedule == ScheduleKind::fixed) {
    if (config.sample_sizes.empty()) throw Error(ErrorCode::invalid_config, "n must list at least one sample size");
    for (auto n : config.sample_sizes) {
      if (n == 0) throw Error(ErrorCode::invalid_config, "sample sizes must be positive");
    }
  } else {
    build_schedule(config, 0);
  }
  if (!std::isfinite(config.init_mean) || !std::isfinite(config.init_log_scale)) {
    throw Error(ErrorCode::invalid_config, "initial parameters must be finite");
  }
  if (config.variance_every > 0 && config.resamples < 2) {
    throw Error(ErrorCode::invalid_config, "variance probes need resamples >= 2");
  }
  switch (config.model) {
    case ModelKind::toy:
      if (config.toy_dim == 0) throw Error(ErrorCode::invalid_config, "toy.d must be positive");
      break;
    case ModelKind::hlr:
      if (config.hlr_groups == 0 || config.hlr_covariates == 0) {
        throw Error(ErrorCode::invalid_config, "hlr.groups and hlr.covariates must be positive");
      }
      break;
    case ModelKind::poisson:
      if (config.poisson_ethnicities == 0 || config.poisson_precincts == 0) {
        throw Error(ErrorCode::invalid_config, "poisson.ethnicities and poisson.precincts must be positive");
      }
      break;
  }
}

std::unique_ptr<models::Model> build_model(const ExperimentConfig& config) {
  switch (config.model) {
    case ModelKind::toy: return models::toy_gaussian(config.toy_dim);
    case ModelKind::hlr: return models::hierarchical_lr(config.hlr_groups, config.hlr_covariates, config.data_seed);
    case ModelKind::poisson:
      return models::multilevel_poisson(config.poisson_ethnicities, config.poisson_precincts, config.data_seed);
  }
  throw Error(ErrorCode::invalid_config, "unknown model");
}

families::FamilySpec build_family(const ExperimentConfig& config, const models::Model& model) {
  return model.variational_family(config.fixed_scale);
}

families::VarParams initial_params(const ExperimentConfig& config, const families::FamilySpec& spec) {
  return families::VarParams::uniform(spec, config.init_mean, config.init_log_scale);
}

optim::SampleSchedule build_schedule(const ExperimentConfig& config, std::size_t n) {
  if (config.schedule == ScheduleKind::fixed) return optim::SampleSchedule::fixed(n);
  if (config.tau > 0.0) return optim::SampleSchedule::geometric(config.n_min, config.tau);
  if (config.n_final > 0) {
    return optim::SampleSchedule::geometric_reaching(config.n_min, config.n_final, config.optim.max_iters);
  }
  throw Error(ErrorCode::invalid_config, "geometric schedule needs schedule.tau > 1 or schedule.n_final");
}

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace qmcvi::config
