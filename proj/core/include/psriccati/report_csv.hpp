#pragma once

#include <iosfwd>

#include "psriccati/solver.hpp"

namespace psr {

/// Header of the per-iteration report CSV.
inline constexpr const char* kReportCsvHeader =
    "iter,kkt_error,step_norm,time_linearize_us,time_backward_us,"
    "time_forward_us,penalty";

/// One row per history entry (iteration 0 is the initial point). Doubles are
/// written with 17 significant digits so that reading the file back restores
/// them exactly; the penalty column is empty for solvers without one.
void write_report_csv(std::ostream& os, const SolveReport& report);

/// Parses a file produced by write_report_csv. Restores the iteration count
/// and every per-iteration series. Update indices are recovered only where
/// the penalty column changes; multiplier-only updates leave no trace in the
/// format, and neither do status, solver name or totals. Throws
/// std::runtime_error with the offending line number on malformed input.
SolveReport read_report_csv(std::istream& is);

}  // namespace psr
