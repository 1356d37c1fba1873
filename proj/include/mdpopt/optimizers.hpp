#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "mdpopt/mdp_core.hpp"
#include "mdpopt/simplex.hpp"
#include "mdpopt/solvers.hpp"
#include "mdpopt/types.hpp"

namespace mdpopt {

// ---------------------------------------------------------------------------
// Step-size schedules
// ---------------------------------------------------------------------------

struct StepSchedule {
  enum class Kind { Constant, Geometric, ThetaRatio };

  Kind kind = Kind::Constant;
  // For Geometric, eta0 <= 0 requests the default
  // max{(1-gamma) D*_0 / gamma, 1e-8} (resolved inside the run when the
  // optimal reference is available, 1.0 otherwise).
  double eta0 = 1.0;
  // Geometric growth factor; <= 0 means the default 1/gamma.
  double ratio = 0.0;

  static StepSchedule constant(double eta);
  static StepSchedule geometric(double eta0 = 0.0, double ratio = 0.0);
  static StepSchedule theta_ratio(double eta0);
};

// eta_k for iteration k. theta_rho is only consulted by ThetaRatio
// (which requires it finite and > 1); gamma only by the Geometric default
// ratio (gamma = 0 with the default ratio is an error).
double step_eta(const StepSchedule& schedule, int k, double gamma,
                double theta_rho);

// ---------------------------------------------------------------------------
// Smoothness / dominance constants
// ---------------------------------------------------------------------------

struct SmoothnessParams {
  double lipschitz_L = 0.0;  // 2 gamma |A| / (1-gamma)^3
  double omega = 0.0;        // (1-gamma)^2 / (16 |S|) / C*^2
};

SmoothnessParams smoothness_params(const Dmdp& mdp, double c_star);

// ---------------------------------------------------------------------------
// Traces
// ---------------------------------------------------------------------------

struct IterationRecord {
  int k = 0;
  std::optional<double> eta_k;
  std::optional<double> v_rho;
  std::optional<double> delta_k;
  std::optional<double> dstar_k;
  std::optional<double> theta_k;
  std::optional<double> grad_map_norm;
  std::optional<double> bound_ppg;
  std::optional<double> bound_weakdom;
  std::optional<double> bound_sublinear;
  std::optional<double> bound_linear;
  std::optional<double> bound_inexact;
  std::optional<double> q_err_inf;
  std::optional<long> floor_events;
  // ||P(pi^k) - P(pi*)||_inf, logged so the superlinear regime is
  // observable; not part of the CSV schema.
  std::optional<double> p_diff_inf;
};

struct BoundViolation {
  std::string check;  // which inequality failed
  int k = 0;
  double measured = 0.0;
  double bound = 0.0;
};

struct RunTrace {
  std::vector<IterationRecord> records;
  std::vector<BoundViolation> violations;
  Policy final_policy;
  bool ok() const { return violations.empty(); }
};

// ---------------------------------------------------------------------------
// Theoretical bound evaluators (pure closed forms)
// ---------------------------------------------------------------------------

double bound_ppg_sublinear(int k, int num_states, int num_actions, double c_star,
                      double gamma);
double bound_weak_dominance(int k, double lipschitz_l, double omega,
                            double delta0);
double bound_pmd_sublinear(int k, double dstar0, double eta, double gamma);
double bound_pmd_linear(int k, double theta_rho, double delta0, double dstar0,
                        double eta0, double gamma);
double bound_inexact_pmd(int k, double theta_rho, double gamma, double tau);
double bound_sampled(int outer_k, int horizon_h, double theta_rho,
                     double gamma);

// ---------------------------------------------------------------------------
// Projected policy gradient
// ---------------------------------------------------------------------------

struct GradientMapping {
  Policy t_l;    // per-state project(pi_s - (1/L) grad_s)
  MatrixXd g_l;  // L (pi - t_l)
  double norm = 0.0;
};

GradientMapping gradient_mapping(const Dmdp& mdp, const Policy& pi,
                                 const VectorXd& mu, double lipschitz_l);

struct PpgOptions {
  int steps = 1;
  // <= 0 selects the default (1-gamma)^3 / (2 gamma |A|), or 1 when
  // gamma = 0 (where L = 0 makes the theorem step undefined).
  double eta = 0.0;
  Policy pi0;  // empty -> uniform
  // Strong-dominance diagnostic: when set, the strong-dominance premise is
  // tracked at every iterate and the geometric recursion is checked only
  // while the premise has held.
  std::optional<double> mu_hat;
  bool check_bounds = true;
  std::optional<double> stop_eps;  // stop once delta_k <= eps (needs ref)
};

// ref may be null ("blind mode"): optimality-referenced fields and all
// bound checks are skipped. The sublinear/weak-dominance envelopes are
// enforced only when
// rho == mu and the default step is in use.
RunTrace ppg_run(const Dmdp& mdp, const VectorXd& mu, const VectorXd& rho,
                 const PpgOptions& opts, const OptimalReference* ref);

// ---------------------------------------------------------------------------
// Policy mirror descent
// ---------------------------------------------------------------------------

// Q-oracle used by the PMD loop: returns the (possibly estimated) Q-table
// for iterate pi at outer iteration k.
using QOracleFn = std::function<QTable(const Policy& pi, int k)>;

struct PmdOptions {
  Bregman kind = Bregman::Euclidean;
  StepSchedule schedule;
  int steps = 1;
  Policy pi0;  // empty -> uniform (interior, so valid for KL)
  bool check_bounds = true;
  std::optional<double> stop_eps;
};

struct PmdOracle {
  QOracleFn q_hat;  // empty -> exact q_function
  // Assumption-1 certificate ||Q_hat - Q||_inf <= tau; absent for exact
  // (descent is then required to 1e-12) and for merely-probabilistic
  // oracles (no per-step enforcement).
  std::optional<double> tau;
  // Record ||Q_hat - Q||_inf per iteration (desk scale only).
  bool record_q_err = false;
  std::string label = "exact";
};

// Shared loop behind pmd_run and the sampling-layer inexact runs.
RunTrace pmd_loop(const Dmdp& mdp, const VectorXd& rho, const PmdOptions& opts,
                  const PmdOracle& oracle, const OptimalReference* ref);

// Exact PMD (Eq-per-state mirror steps with the exact Q-function).
RunTrace pmd_run(const Dmdp& mdp, const VectorXd& rho, const PmdOptions& opts,
                 const OptimalReference* ref);

}  // namespace mdpopt
