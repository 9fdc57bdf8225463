#include "qmcvi/trace_io.hpp"

#include <fstream>
#include <ostream>
#include <sstream>

#include "qmcvi/error.hpp"

namespace qmcvi::trace_io {

std::string_view version() noexcept { return QMCVI_VERSION_STRING; }

void write_trace(std::ostream& out, const optim::RunResult& result, bool timing) {
  out << kTraceHeader << '\n';
  for (const auto& rec : result.trace) {
    out << rec.t << ',' << rec.n_samples << ',' << config::format_double(rec.elbo) << ','
        << config::format_double(rec.grad_norm) << ',';
    if (rec.trace_variance) out << config::format_double(*rec.trace_variance);
    out << ',' << (timing ? rec.wall_ns : 0) << '\n';
  }
}

void write_trace(const std::filesystem::path& path, const optim::RunResult& result, bool timing) {
  std::ostringstream buf;
  write_trace(buf, result, timing);
  write_text(path, buf.str());
}

std::string manifest(const config::ExperimentConfig& config, const optim::RunResult& result) {
  std::string out = config::serialize(config);
  out += "version = qmcvi ";
  out += version();
  out += "\niterations = " + std::to_string(result.trace.size());
  out += "\ntotal_samples = " + std::to_string(result.total_samples);
  out += "\naborted = ";
  out += result.aborted ? "true" : "false";
  if (!result.diagnostic.empty()) out += "\ndiagnostic = " + result.diagnostic;
  for (const auto& w : result.warnings) out += "\nwarning = " + w;
  out += '\n';
  return out;
}

void write_manifest(const std::filesystem::path& path, const config::ExperimentConfig& config,
                    const optim::RunResult& result) {
  write_text(path, manifest(config, result));
}

void write_text(const std::filesystem::path& path, std::string_view text) {
  std::error_code ec;
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::io, "cannot write '" + path.string() + "'");
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) throw Error(ErrorCode::io, "write failed for '" + path.string() + "'");
}

}  // namespace qmcvi::trace_io
