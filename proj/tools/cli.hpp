#pragma once

#include <iosfwd>

namespace qmcvi::cli {

// Entry point of the `qmcvi` executable: run, sweep, rates, selftest.
// Returns the process exit code; errors are reported on `err` as one line.
int main(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace qmcvi::cli
