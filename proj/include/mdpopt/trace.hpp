#pragma once

#include <map>
#include <string>

#include "mdpopt/optimizers.hpp"

namespace mdpopt {

// Normative trace schema; absent quantities serialize as empty fields.
inline constexpr const char* kTraceHeader =
    "k,eta_k,v_rho,delta_k,dstar_k,theta_k,grad_map_norm,bound_ppg,"
    "bound_weakdom,bound_sublinear,bound_linear,bound_inexact,q_err_inf,"
    "floor_events";

std::string trace_to_csv(const RunTrace& trace);
void write_trace_csv(const std::string& path, const RunTrace& trace);

// Run-summary document: config echo, reference constants, terminal gap,
// and any bound violations. Written as JSON so results are self-describing.
void write_run_summary(const std::string& path, const RunTrace& trace,
                       const OptimalReference* ref,
                       const std::map<std::string, std::string>& config);

struct RateFit {
  double fitted_contraction = 0.0;      // exp(least-squares slope)
  double theoretical_contraction = 0.0; // 1 - 1/theta_rho
  int burn_in = 0;
  int first_k = 0;
  int last_k = 0;
  int points = 0;
  bool assertion_checked = false;  // only for geometric-schedule runs
  bool assertion_passed = true;    // fitted <= theoretical + 0.05
};

// Least-squares line through (k, log delta_k) for k >= burn_in, using only
// delta_k > 1e-13. Throws when fewer than 10 usable points remain.
RateFit rate_fit(const RunTrace& trace, double theta_rho, int burn_in,
                 bool geometric_schedule);

}  // namespace mdpopt
