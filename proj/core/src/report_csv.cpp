#include "psriccati/report_csv.hpp"

#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>

namespace psr {
namespace {

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

double parse_double(const std::string& s, int line) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != s.size()) {
    throw std::runtime_error("report csv line " + std::to_string(line) +
                             ": bad number '" + s + "'");
  }
  return v;
}

}  // namespace

void write_report_csv(std::ostream& os, const SolveReport& report) {
  os << kReportCsvHeader << '\n';
  const bool has_penalty = !report.penalties.empty();
  for (std::size_t i = 0; i < report.kkt_history.size(); ++i) {
    const PhaseTimes t = i < report.timings.size() ? report.timings[i]
                                                   : PhaseTimes{};
    const double step = i < report.step_norms.size() ? report.step_norms[i]
                                                     : 0.0;
    os << i << ',' << fmt(report.kkt_history[i]) << ',' << fmt(step) << ','
       << fmt(t.linearize_us) << ',' << fmt(t.backward_us) << ','
       << fmt(t.forward_us) << ',';
    if (has_penalty && i < report.penalties.size()) {
      os << fmt(report.penalties[i]);
    }
    os << '\n';
  }
}

SolveReport read_report_csv(std::istream& is) {
  SolveReport r;
  std::string line;
  int lineno = 1;
  if (!std::getline(is, line) || line != kReportCsvHeader) {
    throw std::runtime_error("report csv line 1: unexpected header");
  }
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    if (cells.size() != 7) {
      throw std::runtime_error("report csv line " + std::to_string(lineno) +
                               ": expected 7 columns");
    }
    const auto iter = static_cast<std::size_t>(parse_double(cells[0], lineno));
    if (iter != r.kkt_history.size()) {
      throw std::runtime_error("report csv line " + std::to_string(lineno) +
                               ": iterations out of order");
    }
    r.kkt_history.push_back(parse_double(cells[1], lineno));
    r.step_norms.push_back(parse_double(cells[2], lineno));
    r.timings.push_back({parse_double(cells[3], lineno),
                         parse_double(cells[4], lineno),
                         parse_double(cells[5], lineno)});
    if (!cells[6].empty()) {
      const double p = parse_double(cells[6], lineno);
      if (!r.penalties.empty() && p != r.penalties.back()) {
        r.penalty_updates.push_back(static_cast<int>(iter));
      }
      r.penalties.push_back(p);
    }
  }
  if (r.kkt_history.empty()) {
    throw std::runtime_error("report csv: no rows");
  }
  r.iterations = static_cast<int>(r.kkt_history.size()) - 1;
  return r;
}

}  // namespace psr
