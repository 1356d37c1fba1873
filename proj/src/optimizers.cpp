#include "mdpopt/optimizers.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <utility>

namespace mdpopt {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

bool same_distribution(const VectorXd& a, const VectorXd& b) {
  return a.size() == b.size() &&
         (a - b).lpNorm<Eigen::Infinity>() <= 1e-12;
}

Policy resolve_pi0(const Dmdp& mdp, const Policy& pi0) {
  if (pi0.probs.size() == 0)
    return Policy::uniform(mdp.num_states, mdp.num_actions);
  if (pi0.num_states() != mdp.num_states ||
      pi0.num_actions() != mdp.num_actions)
    throw std::invalid_argument("pi0 shape does not match MDP");
  pi0.validate();
  return pi0;
}

// Optimality-referenced per-iterate quantities (all empty in blind mode).
struct RefSnapshot {
  double delta = 0.0;
  double dstar = 0.0;
  double theta = kInf;
  double p_diff = 0.0;
};

RefSnapshot ref_snapshot(const Dmdp& mdp, const Policy& pi, double v_rho,
                         Bregman kind, const OptimalReference& ref) {
  RefSnapshot snap;
  snap.delta = ref.delta0_of(v_rho);
  snap.dstar = weighted_divergence(kind, ref.pi_star, pi, ref.d_rho_star);
  const VectorXd d_k = visitation(mdp, pi, ref.rho);
  snap.theta = mismatch_coefficient(ref.d_rho_star, d_k);
  snap.p_diff = (induced_dynamics(mdp, pi).chain -
                 induced_dynamics(mdp, ref.pi_star).chain)
                    .lpNorm<Eigen::Infinity>();
  return snap;
}

}  // namespace

// ---------------------------------------------------------------------------
// Step schedules
// ---------------------------------------------------------------------------

StepSchedule StepSchedule::constant(double eta) {
  if (!(eta > 0.0))
    throw std::invalid_argument("constant schedule requires eta > 0");
  return {Kind::Constant, eta, 0.0};
}

StepSchedule StepSchedule::geometric(double eta0, double ratio) {
  if (ratio > 0.0 && !(ratio > 1.0))
    throw std::invalid_argument("geometric schedule requires ratio > 1");
  return {Kind::Geometric, eta0, ratio};
}

StepSchedule StepSchedule::theta_ratio(double eta0) {
  if (!(eta0 > 0.0))
    throw std::invalid_argument("theta_ratio schedule requires eta0 > 0");
  return {Kind::ThetaRatio, eta0, 0.0};
}

double step_eta(const StepSchedule& schedule, int k, double gamma,
                double theta_rho) {
  if (k < 0) throw std::invalid_argument("step_eta: k must be >= 0");
  switch (schedule.kind) {
    case StepSchedule::Kind::Constant:
      return schedule.eta0;
    case StepSchedule::Kind::Geometric: {
      double ratio = schedule.ratio;
      if (ratio <= 0.0) {
        if (gamma <= 0.0)
          throw std::invalid_argument(
              "geometric schedule with default ratio 1/gamma requires "
              "gamma > 0");
        ratio = 1.0 / gamma;
      }
      return schedule.eta0 * std::pow(ratio, k);
    }
    case StepSchedule::Kind::ThetaRatio:
      if (!std::isfinite(theta_rho) || !(theta_rho > 1.0))
        throw std::invalid_argument(
            "theta_ratio schedule requires finite theta_rho > 1");
      return schedule.eta0 * std::pow(theta_rho / (theta_rho - 1.0), k);
  }
  throw std::logic_error("unreachable schedule kind");
}

SmoothnessParams smoothness_params(const Dmdp& mdp, double c_star) {
  const double om = 1.0 - mdp.gamma;
  SmoothnessParams p;
  p.lipschitz_L = 2.0 * mdp.gamma * mdp.num_actions / (om * om * om);
  p.omega = std::isfinite(c_star) && c_star > 0.0
                ? om * om / (16.0 * mdp.num_states * c_star * c_star)
                : 0.0;
  return p;
}

// ---------------------------------------------------------------------------
// Bound evaluators
// ---------------------------------------------------------------------------

double bound_ppg_sublinear(int k, int num_states, int num_actions, double c_star,
                      double gamma) {
  if (k < 1) throw std::invalid_argument("bound_ppg_sublinear: k must be >= 1");
  const double om = 1.0 - gamma;
  return 128.0 * num_states * num_actions * c_star * c_star /
         (k * om * om * om * om * om);
}

double bound_weak_dominance(int k, double lipschitz_l, double omega,
                            double delta0) {
  if (k < 1)
    throw std::invalid_argument("bound_weak_dominance: k must be >= 1");
  if (!(omega > 0.0))
    throw std::invalid_argument("bound_weak_dominance: omega must be > 0");
  const double sublinear = 4.0 * lipschitz_l / (omega * k);
  const double geometric = std::pow(std::sqrt(2.0) / 2.0, k) * delta0;
  return std::max(sublinear, geometric);
}

double bound_pmd_sublinear(int k, double dstar0, double eta, double gamma) {
  if (k < 0) throw std::invalid_argument("bound_pmd_sublinear: k < 0");
  const double om = 1.0 - gamma;
  return (dstar0 / (eta * om) + 1.0 / (om * om)) / (k + 1);
}

double bound_pmd_linear(int k, double theta_rho, double delta0, double dstar0,
                        double eta0, double gamma) {
  if (k < 0) throw std::invalid_argument("bound_pmd_linear: k < 0");
  if (!std::isfinite(theta_rho) || !(theta_rho >= 1.0))
    throw std::invalid_argument("bound_pmd_linear: bad theta_rho");
  return std::pow(1.0 - 1.0 / theta_rho, k) *
         (delta0 + dstar0 / (eta0 * gamma));
}

double bound_inexact_pmd(int k, double theta_rho, double gamma, double tau) {
  if (k < 0) throw std::invalid_argument("bound_inexact_pmd: k < 0");
  const double om = 1.0 - gamma;
  return std::pow(1.0 - 1.0 / theta_rho, k) * 2.0 / om +
         4.0 * theta_rho * tau / om;
}

double bound_sampled(int outer_k, int horizon_h, double theta_rho,
                     double gamma) {
  const double om = 1.0 - gamma;
  return std::pow(1.0 - 1.0 / theta_rho, outer_k) * 2.0 / om +
         8.0 * theta_rho * std::pow(gamma, horizon_h) / (om * om);
}

// ---------------------------------------------------------------------------
// Projected policy gradient
// ---------------------------------------------------------------------------

GradientMapping gradient_mapping(const Dmdp& mdp, const Policy& pi,
                                 const VectorXd& mu, double lipschitz_l) {
  if (!(lipschitz_l > 0.0))
    throw std::invalid_argument("gradient_mapping: L must be > 0");
  const MatrixXd grad = policy_gradient(mdp, pi, mu);
  GradientMapping out;
  out.t_l.probs.resize(pi.num_states(), pi.num_actions());
  for (int s = 0; s < pi.num_states(); ++s)
    out.t_l.probs.row(s) =
        project_simplex(pi.probs.row(s).transpose() -
                        grad.row(s).transpose() / lipschitz_l)
            .transpose();
  out.g_l = lipschitz_l * (pi.probs - out.t_l.probs);
  out.norm = out.g_l.norm();
  return out;
}

RunTrace ppg_run(const Dmdp& mdp, const VectorXd& mu, const VectorXd& rho,
                 const PpgOptions& opts, const OptimalReference* ref) {
  mdp.validate();
  validate_distribution(mu);
  validate_distribution(rho);
  if (opts.steps < 1) throw std::invalid_argument("ppg_run: steps must be >= 1");

  const double om = 1.0 - mdp.gamma;
  const SmoothnessParams smooth =
      smoothness_params(mdp, ref ? ref->c_star_rho : kInf);
  const double default_eta =
      mdp.gamma > 0.0 ? om * om * om / (2.0 * mdp.gamma * mdp.num_actions)
                      : 1.0;
  const double eta = opts.eta > 0.0 ? opts.eta : default_eta;
  const bool default_step = opts.eta <= 0.0;
  const bool rho_is_mu = same_distribution(rho, mu);
  const bool use_grad_map = mdp.gamma > 0.0;
  // The sublinear and weak-dominance envelopes are stated for rho = mu with
  // the default step.
  const bool enforce_envelopes = opts.check_bounds && ref && rho_is_mu &&
                                 default_step && use_grad_map &&
                                 std::isfinite(ref->c_star_rho);

  RunTrace trace;
  Policy pi = resolve_pi0(mdp, opts.pi0);

  double delta0 = 0.0;          // gap under rho
  double delta0_mu = 0.0;       // gap under mu (A.2 diagnostic)
  bool strong_premise_held = opts.mu_hat.has_value();
  double prev_f_mu = 0.0;       // V_mu(pi^k), for the descent check
  double pending_half_gsq = 0.0;  // ||G_L(pi^k)||^2 / (2L) from step k

  for (int k = 0; k <= opts.steps; ++k) {
    IterationRecord rec;
    rec.k = k;
    rec.eta_k = eta;
    const double v_rho = value_weighted(mdp, pi, rho);
    rec.v_rho = v_rho;
    const double f_mu = rho_is_mu ? v_rho : value_weighted(mdp, pi, mu);

    RefSnapshot snap;
    if (ref) {
      snap = ref_snapshot(mdp, pi, v_rho, Bregman::Euclidean, *ref);
      rec.delta_k = snap.delta;
      rec.dstar_k = snap.dstar;
      if (std::isfinite(snap.theta)) rec.theta_k = snap.theta;
      rec.p_diff_inf = snap.p_diff;
      if (k == 0) {
        delta0 = snap.delta;
        delta0_mu = f_mu - mu.dot(ref->v_star);
      }
    }

    GradientMapping gm;
    if (use_grad_map) {
      gm = gradient_mapping(mdp, pi, mu, smooth.lipschitz_L);
      rec.grad_map_norm = gm.norm;
    }

    // Descent check deferred from the previous step, now that V_mu(pi^k)
    // is known: V_mu(pi^{k-1}) - V_mu(pi^k) >= ||G_L||^2 / (2L) - 1e-9.
    if (k > 0 && default_step && use_grad_map) {
      const double decrease = prev_f_mu - f_mu;
      if (decrease < pending_half_gsq - 1e-9)
        trace.violations.push_back(
            {"ppg_descent", k - 1, decrease, pending_half_gsq});
    }

    if (enforce_envelopes && k >= 1) {
      const double b1 = bound_ppg_sublinear(k, mdp.num_states, mdp.num_actions,
                                       ref->c_star_rho, mdp.gamma);
      rec.bound_ppg = b1;
      if (snap.delta > b1 + Tol::bound_slack)
        trace.violations.push_back({"ppg_sublinear", k, snap.delta, b1});
      if (smooth.omega > 0.0) {
        const double b2 =
            bound_weak_dominance(k, smooth.lipschitz_L, smooth.omega, delta0);
        rec.bound_weakdom = b2;
        if (snap.delta > b2 + Tol::bound_slack)
          trace.violations.push_back({"ppg_weak_dom", k, snap.delta, b2});
      }
    }

    // One-step optimality certificate: V_rho(T_L(pi)) - V* <= 2 sqrt(2|S|) C* ||G_L|| / (1-gamma).
    if (opts.check_bounds && ref && rho_is_mu && use_grad_map &&
        std::isfinite(ref->c_star_rho)) {
      const double lhs = value_weighted(mdp, gm.t_l, rho) - rho.dot(ref->v_star);
      const double rhs = 2.0 * std::sqrt(2.0 * mdp.num_states) *
                         ref->c_star_rho * gm.norm / om;
      if (lhs > rhs + Tol::bound_slack)
        trace.violations.push_back({"ppg_one_step_cert", k, lhs, rhs});
    }

    // Strong gradient-mapping dominance diagnostic with user-supplied mu_hat.
    if (opts.mu_hat && ref && use_grad_map) {
      const double mu_hat = *opts.mu_hat;
      if (strong_premise_held && k >= 1) {
        const double envelope =
            std::pow(1.0 + mu_hat / smooth.lipschitz_L, -k) * delta0_mu;
        const double gap_mu = f_mu - mu.dot(ref->v_star);
        if (gap_mu > envelope + Tol::bound_slack)
          trace.violations.push_back(
              {"ppg_strong_dom_diag", k, gap_mu, envelope});
      }
      const double f_tl_gap =
          value_weighted(mdp, gm.t_l, mu) - mu.dot(ref->v_star);
      if (0.5 * gm.norm * gm.norm < mu_hat * f_tl_gap - 1e-12)
        strong_premise_held = false;
    }

    trace.records.push_back(rec);
    if (ref && opts.stop_eps && snap.delta <= *opts.stop_eps) break;
    if (k == opts.steps) break;

    prev_f_mu = f_mu;
    if (default_step && use_grad_map) {
      // eta = 1/L, so the update is exactly T_L(pi^k).
      pending_half_gsq = gm.norm * gm.norm / (2.0 * smooth.lipschitz_L);
      pi = gm.t_l;
    } else {
      const MatrixXd grad = policy_gradient(mdp, pi, mu);
      for (int s = 0; s < mdp.num_states; ++s)
        pi.probs.row(s) =
            project_simplex(pi.probs.row(s).transpose() -
                            eta * grad.row(s).transpose())
                .transpose();
    }
  }

  trace.final_policy = std::move(pi);
  return trace;
}

// ---------------------------------------------------------------------------
// Policy mirror descent
// ---------------------------------------------------------------------------

RunTrace pmd_loop(const Dmdp& mdp, const VectorXd& rho, const PmdOptions& opts,
                  const PmdOracle& oracle, const OptimalReference* ref) {
  mdp.validate();
  validate_distribution(rho);
  if (opts.steps < 1)
    throw std::invalid_argument("pmd_loop: steps must be >= 1");

  const double om = 1.0 - mdp.gamma;
  const double theta_rho = ref ? ref->theta_rho : kInf;
  Policy pi = resolve_pi0(mdp, opts.pi0);
  if (opts.kind == Bregman::Kl && !pi.interior())
    throw std::invalid_argument("KL geometry requires an interior pi0");

  RunTrace trace;
  const bool rho_positive = rho.minCoeff() > 0.0;

  // Resolve the geometric default eta0 = max{(1-gamma) D*_0 / gamma, 1e-8}.
  StepSchedule schedule = opts.schedule;
  double dstar0 = 0.0;
  if (ref) dstar0 = weighted_divergence(opts.kind, ref->pi_star, pi,
                                        ref->d_rho_star);
  if (schedule.kind == StepSchedule::Kind::Geometric && schedule.eta0 <= 0.0) {
    if (mdp.gamma <= 0.0)
      throw std::invalid_argument("geometric default eta0 requires gamma > 0");
    schedule.eta0 = ref ? std::max(om * dstar0 / mdp.gamma, 1e-8) : 1.0;
  }
  if (schedule.kind != StepSchedule::Kind::Constant && !(schedule.eta0 > 0.0))
    throw std::invalid_argument("schedule eta0 must be > 0");

  // Does the schedule satisfy the increasing-step hypothesis
  // eta_{k+1} >= eta_k * theta/(theta-1) of the linear-rate theorem?
  bool linear_schedule = false;
  if (ref && std::isfinite(theta_rho) && theta_rho > 1.0) {
    if (schedule.kind == StepSchedule::Kind::ThetaRatio) {
      linear_schedule = true;
    } else if (schedule.kind == StepSchedule::Kind::Geometric) {
      const double ratio =
          schedule.ratio > 0.0 ? schedule.ratio : 1.0 / mdp.gamma;
      linear_schedule = ratio >= theta_rho / (theta_rho - 1.0) - 1e-12;
    }
  }
  const bool enforce_sublinear = opts.check_bounds && ref && rho_positive &&
                                 schedule.kind == StepSchedule::Kind::Constant;
  const bool enforce_linear = opts.check_bounds && rho_positive &&
                              linear_schedule;
  // The inexact theorem needs the stronger hypotheses eta_{k+1} >= eta_k /
  // gamma and eta_0 >= (1-gamma) D*_0 / gamma.
  bool inexact_schedule = false;
  if (ref && std::isfinite(theta_rho) && theta_rho > 1.0 &&
      schedule.kind == StepSchedule::Kind::Geometric && mdp.gamma > 0.0) {
    const double ratio =
        schedule.ratio > 0.0 ? schedule.ratio : 1.0 / mdp.gamma;
    inexact_schedule = ratio >= 1.0 / mdp.gamma - 1e-12 &&
                       schedule.eta0 >= om * dstar0 / mdp.gamma - 1e-12;
  }
  const bool enforce_inexact =
      opts.check_bounds && rho_positive && inexact_schedule;
  const bool tau_certified = oracle.tau.has_value();
  const double tau = oracle.tau.value_or(0.0);
  // No q_hat callable means the loop queries the exact Q-function itself.
  const bool exact_oracle = !oracle.q_hat;

  const bool desk_scale =
      static_cast<long>(mdp.num_states) * mdp.num_actions <= 10000;

  double prev_v_rho = 0.0, prev_delta = 0.0, prev_dstar = 0.0, prev_eta = 0.0;
  int pending_floor_events = 0;

  for (int k = 0; k <= opts.steps; ++k) {
    const double eta_k = step_eta(schedule, k, mdp.gamma, theta_rho);

    IterationRecord rec;
    rec.k = k;
    rec.eta_k = eta_k;
    const double v_rho = value_weighted(mdp, pi, rho);
    rec.v_rho = v_rho;
    rec.floor_events = pending_floor_events;

    RefSnapshot snap;
    if (ref) {
      snap = ref_snapshot(mdp, pi, v_rho, opts.kind, *ref);
      rec.delta_k = snap.delta;
      rec.dstar_k = snap.dstar;
      if (std::isfinite(snap.theta)) rec.theta_k = snap.theta;
      rec.p_diff_inf = snap.p_diff;
    }

    // Descent / bounded-increase check against the previous iterate.
    if (k > 0) {
      const double increase = v_rho - prev_v_rho;
      if (tau_certified && tau > 0.0) {
        const double cap = 2.0 * tau / om;
        if (increase > cap + Tol::bound_slack)
          trace.violations.push_back(
              {"pmd_inexact_increase", k - 1, increase, cap});
      } else if ((exact_oracle || tau_certified) && increase > Tol::descent) {
        trace.violations.push_back({"pmd_descent", k - 1, increase, 0.0});
      }
    }

    // Master recursion (needs the k-1 -> k pair and finite theta_k).
    if (opts.check_bounds && ref && rho_positive && k > 0 &&
        std::isfinite(snap.theta) && exact_oracle) {
      const double lhs = snap.theta * (snap.delta - prev_delta) + prev_delta;
      const double rhs = (prev_dstar - snap.dstar) / (om * prev_eta);
      if (lhs > rhs + Tol::bound_slack)
        trace.violations.push_back({"pmd_master_recursion", k - 1, lhs, rhs});
    }

    if (ref && rho_positive) {
      if (schedule.kind == StepSchedule::Kind::Constant) {
        const double b =
            bound_pmd_sublinear(k, dstar0, schedule.eta0, mdp.gamma);
        rec.bound_sublinear = b;
        if (enforce_sublinear && exact_oracle &&
            snap.delta > b + Tol::bound_slack)
          trace.violations.push_back({"pmd_sublinear", k, snap.delta, b});
      } else if (std::isfinite(theta_rho) && theta_rho > 1.0) {
        const double delta0 =
            trace.records.empty() ? snap.delta : *trace.records[0].delta_k;
        const double b = bound_pmd_linear(k, theta_rho, delta0, dstar0,
                                          schedule.eta0, mdp.gamma);
        rec.bound_linear = b;
        if (enforce_linear && exact_oracle &&
            snap.delta > b + Tol::bound_slack)
          trace.violations.push_back({"pmd_linear", k, snap.delta, b});
        if (tau_certified) {
          const double bi = bound_inexact_pmd(k, theta_rho, mdp.gamma, tau);
          rec.bound_inexact = bi;
          if (enforce_inexact && tau > 0.0 &&
              snap.delta > bi + Tol::bound_slack)
            trace.violations.push_back({"pmd_inexact", k, snap.delta, bi});
        }
      }
    }

    // Oracle evaluation for the step k -> k+1.
    QTable q_hat;
    MatrixXd q_exact;
    const bool last = k == opts.steps ||
                      (ref && opts.stop_eps && snap.delta <= *opts.stop_eps);
    if (!last) {
      if (oracle.q_hat) {
        q_hat = oracle.q_hat(pi, k);
        if (oracle.record_q_err && desk_scale) {
          q_exact = q_function(mdp, pi).values;
          rec.q_err_inf = (q_hat.values - q_exact).lpNorm<Eigen::Infinity>();
          if (tau_certified && *rec.q_err_inf > tau + 1e-12)
            trace.violations.push_back(
                {"oracle_tau_certificate", k, *rec.q_err_inf, tau});
        }
      } else {
        q_hat = q_function(mdp, pi);
        if (oracle.record_q_err) rec.q_err_inf = 0.0;
      }
    }

    trace.records.push_back(rec);
    if (last) break;

    // Per-state mirror step with Q_hat.
    Policy next;
    next.probs.resize(mdp.num_states, mdp.num_actions);
    pending_floor_events = 0;
    for (int s = 0; s < mdp.num_states; ++s) {
      const auto step = mirror_step(opts.kind, pi.probs.row(s).transpose(),
                                    q_hat.values.row(s).transpose(), eta_k);
      next.probs.row(s) = step.probs.transpose();
      pending_floor_events += step.floor_events;
      const double inner =
          q_hat.values.row(s).dot(next.probs.row(s) - pi.probs.row(s));
      if (inner > Tol::descent)
        trace.violations.push_back({"pmd_q_descent", k, inner, 0.0});
    }

    prev_v_rho = v_rho;
    prev_delta = snap.delta;
    prev_dstar = snap.dstar;
    prev_eta = eta_k;
    pi = std::move(next);
  }

  trace.final_policy = std::move(pi);
  return trace;
}

RunTrace pmd_run(const Dmdp& mdp, const VectorXd& rho, const PmdOptions& opts,
                 const OptimalReference* ref) {
  return pmd_loop(mdp, rho, opts, PmdOracle{}, ref);
}

}  // namespace mdpopt
