#include "mdpopt/trace.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <json.hpp>
#include <sstream>
#include <stdexcept>

namespace mdpopt {

namespace {

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void append(std::string& line, const std::optional<double>& v) {
  line += ',';
  if (v) line += fmt(*v);
}

}  // namespace

std::string trace_to_csv(const RunTrace& trace) {
  std::string out = kTraceHeader;
  out += '\n';
  for (const auto& r : trace.records) {
    std::string line = std::to_string(r.k);
    append(line, r.eta_k);
    append(line, r.v_rho);
    append(line, r.delta_k);
    append(line, r.dstar_k);
    append(line, r.theta_k);
    append(line, r.grad_map_norm);
    append(line, r.bound_ppg);
    append(line, r.bound_weakdom);
    append(line, r.bound_sublinear);
    append(line, r.bound_linear);
    append(line, r.bound_inexact);
    append(line, r.q_err_inf);
    line += ',';
    if (r.floor_events) line += std::to_string(*r.floor_events);
    out += line;
    out += '\n';
  }
  return out;
}

void write_trace_csv(const std::string& path, const RunTrace& trace) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
  out << trace_to_csv(trace);
  if (!out) throw std::runtime_error("failed writing '" + path + "'");
}

void write_run_summary(const std::string& path, const RunTrace& trace,
                       const OptimalReference* ref,
                       const std::map<std::string, std::string>& config) {
  nlohmann::json doc;
  doc["config"] = config;
  if (ref) {
    doc["c_star_rho"] = std::isfinite(ref->c_star_rho)
                            ? nlohmann::json(ref->c_star_rho)
                            : nlohmann::json("inf");
    doc["theta_rho"] = std::isfinite(ref->theta_rho)
                           ? nlohmann::json(ref->theta_rho)
                           : nlohmann::json("inf");
  }
  doc["iterations"] = trace.records.empty() ? 0 : trace.records.back().k;
  if (!trace.records.empty()) {
    const auto& last = trace.records.back();
    if (last.v_rho) doc["terminal_v_rho"] = *last.v_rho;
    if (last.delta_k) doc["terminal_delta"] = *last.delta_k;
  }
  nlohmann::json viols = nlohmann::json::array();
  for (const auto& v : trace.violations)
    viols.push_back({{"check", v.check},
                     {"k", v.k},
                     {"measured", v.measured},
                     {"bound", v.bound}});
  doc["bound_violations"] = std::move(viols);

  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
  out << doc.dump(2) << "\n";
}

RateFit rate_fit(const RunTrace& trace, double theta_rho, int burn_in,
                 bool geometric_schedule) {
  RateFit fit;
  fit.burn_in = burn_in;
  fit.theoretical_contraction =
      std::isfinite(theta_rho) && theta_rho > 0.0 ? 1.0 - 1.0 / theta_rho
                                                  : 1.0;
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int n = 0;
  for (const auto& r : trace.records) {
    if (r.k < burn_in || !r.delta_k || !(*r.delta_k > 1e-13)) continue;
    const double x = r.k, y = std::log(*r.delta_k);
    if (n == 0) fit.first_k = r.k;
    fit.last_k = r.k;
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    ++n;
  }
  if (n < 10)
    throw std::runtime_error("rate_fit: only " + std::to_string(n) +
                             " usable points after burn-in (need >= 10)");
  fit.points = n;
  const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  fit.fitted_contraction = std::exp(slope);
  if (geometric_schedule && std::isfinite(theta_rho)) {
    fit.assertion_checked = true;
    fit.assertion_passed =
        fit.fitted_contraction <= fit.theoretical_contraction + 0.05;
  }
  return fit;
}

}  // namespace mdpopt
