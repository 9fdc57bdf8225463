#pragma once

// Trace CSV and run manifest writers. Output is byte-reproducible: fixed
// column order, "%.17g" numbers, LF line endings.

#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>

#include "qmcvi/config.hpp"

namespace qmcvi::trace_io {

inline constexpr std::string_view kTraceHeader = "t,N_t,elbo,grad_norm,trvar,wall_ns";

std::string_view version() noexcept;

// trvar is empty for records without a variance probe; wall_ns is 0 unless timing is set.
void write_trace(std::ostream& out, const optim::RunResult& result, bool timing);
void write_trace(const std::filesystem::path& path, const optim::RunResult& result, bool timing);

// Resolved config followed by the run's seed, version and summary lines.
std::string manifest(const config::ExperimentConfig& config, const optim::RunResult& result);
void write_manifest(const std::filesystem::path& path, const config::ExperimentConfig& config,
                    const optim::RunResult& result);

// Writes text to path (creating parent directories) with LF line endings.
void write_text(const std::filesystem::path& path, std::string_view text);

}  // namespace qmcvi::trace_io
