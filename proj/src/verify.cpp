#include "mdpopt/verify.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "mdpopt/instances.hpp"
#include "mdpopt/mdp_core.hpp"
#include "mdpopt/optimizers.hpp"
#include "mdpopt/rng.hpp"
#include "mdpopt/sampling.hpp"
#include "mdpopt/solvers.hpp"

namespace mdpopt {

namespace {

struct Battery {
  std::vector<InstanceSpec> specs;
  std::vector<Dmdp> mdps;
};

Battery make_battery(const VerifyOptions& opts) {
  const int count = opts.full ? 100 : 10;
  const int max_s = opts.full ? 12 : 6;
  const int max_a = opts.full ? 5 : 3;
  const double gammas[] = {0.8, 0.9, 0.95};
  Battery b;
  CounterRng rng(opts.seed, 0xBA77E57ull);
  for (int i = 0; i < count; ++i) {
    const int ns = 2 + static_cast<int>(rng() % (max_s - 1));
    const int na = 2 + static_cast<int>(rng() % (max_a - 1));
    const double gamma = gammas[i % 3];
    b.specs.push_back(
        InstanceSpec::random(ns, na, 1.0, gamma, opts.seed * 1000 + i));
    b.mdps.push_back(generate(b.specs.back()));
  }
  return b;
}

Policy random_interior_policy(const Dmdp& mdp, CounterRng& rng) {
  Policy pi;
  pi.probs.resize(mdp.num_states, mdp.num_actions);
  for (int s = 0; s < mdp.num_states; ++s) {
    double sum = 0.0;
    for (int a = 0; a < mdp.num_actions; ++a) {
      pi.probs(s, a) = rng.gamma(1.0) + 1e-6;
      sum += pi.probs(s, a);
    }
    pi.probs.row(s) /= sum;
  }
  return pi;
}

std::string describe(const InstanceSpec& spec) {
  std::ostringstream os;
  os << "instance(random, S=" << spec.num_states << ", A=" << spec.num_actions
     << ", gamma=" << spec.gamma << ", seed=" << spec.seed << ")";
  return os.str();
}

// Exhaustive-support oracle for the Euclidean projection: try every
// nonempty support, shift uniformly to feasibility, keep the closest
// feasible candidate.
VectorXd kkt_projection_oracle(const VectorXd& v) {
  const int n = static_cast<int>(v.size());
  double best_dist = std::numeric_limits<double>::infinity();
  VectorXd best;
  for (unsigned mask = 1; mask < (1u << n); ++mask) {
    double sum = 0.0;
    int size = 0;
    for (int i = 0; i < n; ++i)
      if (mask & (1u << i)) {
        sum += v(i);
        ++size;
      }
    const double shift = (1.0 - sum) / size;
    VectorXd p = VectorXd::Zero(n);
    bool feasible = true;
    for (int i = 0; i < n; ++i) {
      if (!(mask & (1u << i))) continue;
      p(i) = v(i) + shift;
      if (p(i) < -1e-15) feasible = false;
    }
    if (!feasible) continue;
    const double dist = (p - v).squaredNorm();
    if (dist < best_dist) {
      best_dist = dist;
      best = p;
    }
  }
  return best;
}

class Runner {
 public:
  Runner(const VerifyOptions& opts, VerifyReport& report)
      : opts_(opts), report_(report) {
    project_ = opts.project ? opts.project : ProjectFn(project_simplex);
    mirror_ = opts.mirror
                  ? opts.mirror
                  : MirrorFn([](Bregman k, const VectorXd& p, const VectorXd& q,
                                double eta) { return mirror_step(k, p, q, eta); });
  }

  // Runs `body`, which returns an empty string on success or a
  // counterexample description on failure; exceptions fail the check too.
  void check(const std::string& name,
             const std::function<std::string()>& body) {
    CheckResult result;
    result.name = name;
    try {
      result.detail = body();
      result.passed = result.detail.empty();
    } catch (const std::exception& e) {
      result.passed = false;
      result.detail = std::string("exception: ") + e.what();
    }
    if (!result.passed && !first_failure_recorded_) {
      first_failure_recorded_ = true;
      if (!opts_.counterexample_path.empty()) {
        std::ofstream out(opts_.counterexample_path);
        out << "check: " << result.name << "\n" << result.detail << "\n";
      }
    }
    report_.checks.push_back(std::move(result));
  }

  const ProjectFn& project() const { return project_; }
  const MirrorFn& mirror() const { return mirror_; }

 private:
  const VerifyOptions& opts_;
  VerifyReport& report_;
  ProjectFn project_;
  MirrorFn mirror_;
  bool first_failure_recorded_ = false;
};

}  // namespace

VerifyReport verify_suite(const VerifyOptions& opts) {
  VerifyReport report;
  Runner run(opts, report);
  const Battery battery = make_battery(opts);
  const int trials = opts.full ? 500 : 100;

  run.check("project_simplex_kkt", [&]() -> std::string {
    CounterRng rng(opts.seed, 0x51471ull);
    for (int t = 0; t < trials; ++t) {
      const int n = 2 + static_cast<int>(rng() % 7);
      VectorXd v(n);
      for (int i = 0; i < n; ++i) v(i) = rng.uniform(-2.0, 2.0);
      const VectorXd p = run.project()(v);
      const VectorXd oracle = kkt_projection_oracle(v);
      if (p.size() != n || p.minCoeff() < -1e-12 ||
          std::abs(p.sum() - 1.0) > 1e-9 ||
          (p - oracle).lpNorm<Eigen::Infinity>() > 1e-9) {
        std::ostringstream os;
        os << "projection mismatch at trial " << t << ": input "
           << v.transpose() << ", got " << p.transpose() << ", oracle "
           << oracle.transpose();
        return os.str();
      }
    }
    return "";
  });

  run.check("mirror_step_three_point", [&]() -> std::string {
    CounterRng rng(opts.seed, 0x3B01ull);
    for (int t = 0; t < trials; ++t) {
      const int n = 2 + static_cast<int>(rng() % 4);
      VectorXd pi(n), u(n), q(n);
      double sp = 0, su = 0;
      for (int i = 0; i < n; ++i) {
        pi(i) = rng.gamma(1.0) + 1e-6;
        u(i) = rng.gamma(1.0) + 1e-6;
        q(i) = rng.uniform(0.0, 10.0);
        sp += pi(i);
        su += u(i);
      }
      pi /= sp;
      u /= su;
      const double eta = rng.uniform(0.0, 2.0);
      for (Bregman kind : {Bregman::Euclidean, Bregman::Kl}) {
        const VectorXd plus = run.mirror()(kind, pi, q, eta).probs;
        const double lhs =
            eta * q.dot(plus) + bregman_divergence(kind, plus, pi);
        const double rhs = eta * q.dot(u) + bregman_divergence(kind, u, pi) -
                           bregman_divergence(kind, u, plus);
        if (lhs > rhs + 1e-9) {
          std::ostringstream os;
          os << "three-point inequality violated (kind="
             << (kind == Bregman::Kl ? "kl" : "euclidean") << ", trial " << t
             << "): lhs=" << lhs << " rhs=" << rhs;
          return os.str();
        }
      }
    }
    return "";
  });

  run.check("pmd_descent_property", [&]() -> std::string {
    for (std::size_t i = 0; i < battery.mdps.size(); ++i) {
      const Dmdp& mdp = battery.mdps[i];
      const VectorXd rho = uniform_distribution(mdp.num_states);
      const Policy pi0 = Policy::uniform(mdp.num_states, mdp.num_actions);
      const MatrixXd q = q_function(mdp, pi0).values;
      const double v0 = value_weighted(mdp, pi0, rho);
      for (Bregman kind : {Bregman::Euclidean, Bregman::Kl}) {
        Policy pi1;
        pi1.probs.resize(mdp.num_states, mdp.num_actions);
        for (int s = 0; s < mdp.num_states; ++s) {
          const VectorXd next =
              run.mirror()(kind, pi0.probs.row(s).transpose(),
                           q.row(s).transpose(), 0.5)
                  .probs;
          pi1.probs.row(s) = next.transpose();
          const double inner =
              q.row(s).dot(pi1.probs.row(s) - pi0.probs.row(s));
          if (inner > Tol::descent)
            return "Q-descent violated at k=0, state " + std::to_string(s) +
                   " on " + describe(battery.specs[i]) +
                   ": inner=" + std::to_string(inner);
        }
        const double v1 = value_weighted(mdp, pi1, rho);
        if (v1 > v0 + Tol::descent)
          return "value descent violated at k=0 on " +
                 describe(battery.specs[i]) + ": V increased by " +
                 std::to_string(v1 - v0);
      }
    }
    return "";
  });

  run.check("value_identities", [&]() -> std::string {
    CounterRng rng(opts.seed, 0x7A1ull);
    for (std::size_t i = 0; i < battery.mdps.size(); ++i) {
      const Dmdp& mdp = battery.mdps[i];
      const Policy pi = random_interior_policy(mdp, rng);
      const VectorXd v = value_function(mdp, pi);
      const double cap = 1.0 / (1.0 - mdp.gamma);
      if (v.minCoeff() < -Tol::value_range ||
          v.maxCoeff() > cap + Tol::value_range)
        return "value out of range on " + describe(battery.specs[i]);
      const MatrixXd q = q_function(mdp, pi).values;
      for (int s = 0; s < mdp.num_states; ++s)
        if (std::abs(q.row(s).dot(pi.probs.row(s)) - v(s)) >
            Tol::inner_product)
          return "<pi_s, Q_s> != V_s on " + describe(battery.specs[i]);
      const VectorXd rho = uniform_distribution(mdp.num_states);
      const VectorXd d = visitation(mdp, pi, rho);
      if (std::abs(d.sum() - 1.0) > Tol::dist_sum)
        return "visitation does not sum to 1 on " + describe(battery.specs[i]);
      for (int s = 0; s < mdp.num_states; ++s)
        if (d(s) < (1.0 - mdp.gamma) * rho(s) - 1e-12)
          return "visitation lower bound violated on " +
                 describe(battery.specs[i]);
    }
    return "";
  });

  run.check("performance_difference", [&]() -> std::string {
    CounterRng rng(opts.seed, 0x9D1ull);
    for (std::size_t i = 0; i < battery.mdps.size(); ++i) {
      const Dmdp& mdp = battery.mdps[i];
      const Policy a = random_interior_policy(mdp, rng);
      const Policy b = random_interior_policy(mdp, rng);
      const VectorXd rho = uniform_distribution(mdp.num_states);
      const auto [lhs, rhs] = performance_difference(mdp, a, b, rho);
      if (std::abs(lhs - rhs) > 1e-9)
        return "performance-difference mismatch " + std::to_string(lhs - rhs) +
               " on " + describe(battery.specs[i]);
    }
    return "";
  });

  run.check("policy_gradient_fd", [&]() -> std::string {
    CounterRng rng(opts.seed, 0xFDull);
    const std::size_t n_fd = opts.full ? battery.mdps.size() : 5;
    for (std::size_t i = 0; i < n_fd && i < battery.mdps.size(); ++i) {
      const Dmdp& mdp = battery.mdps[i];
      const Policy pi = random_interior_policy(mdp, rng);
      const VectorXd mu = uniform_distribution(mdp.num_states);
      const MatrixXd grad = policy_gradient(mdp, pi, mu);
      const double step = 1e-6;
      for (int s = 0; s < mdp.num_states; ++s)
        for (int a = 0; a < mdp.num_actions; ++a) {
          MatrixXd up = pi.probs, down = pi.probs;
          up(s, a) += step;
          down(s, a) -= step;
          const double fd = (value_analytic_extension(mdp, up, mu) -
                             value_analytic_extension(mdp, down, mu)) /
                            (2.0 * step);
          const double denom = std::max(std::abs(grad(s, a)), 1.0);
          if (std::abs(fd - grad(s, a)) / denom > 1e-5)
            return "gradient FD mismatch at (s=" + std::to_string(s) +
                   ",a=" + std::to_string(a) + ") on " +
                   describe(battery.specs[i]);
        }
    }
    return "";
  });

  run.check("solver_oracles", [&]() -> std::string {
    for (std::size_t i = 0; i < battery.mdps.size(); ++i) {
      const Dmdp& mdp = battery.mdps[i];
      const auto pi_result = policy_iteration(mdp);
      const VectorXd v_vi = value_iteration_oracle(mdp, 1e-9);
      if ((v_vi - pi_result.v_star).lpNorm<Eigen::Infinity>() > 1e-8)
        return "policy iteration vs value iteration mismatch on " +
               describe(battery.specs[i]);
      const VectorXd rho = uniform_distribution(mdp.num_states);
      const auto ref = optimal_reference(mdp, rho);
      if (std::isfinite(ref.theta_rho) &&
          ref.theta_rho < 1.0 / (1.0 - mdp.gamma) - 1e-12)
        return "theta_rho below 1/(1-gamma) on " + describe(battery.specs[i]);
      // Exhaustive enumeration where feasible.
      double combos = std::pow(mdp.num_actions, mdp.num_states);
      if (combos <= 1024.0) {
        const double v_star_rho = rho.dot(pi_result.v_star);
        std::vector<int> actions(mdp.num_states, 0);
        const long total = static_cast<long>(combos);
        for (long code = 0; code < total; ++code) {
          long rem = code;
          for (int s = 0; s < mdp.num_states; ++s) {
            actions[s] = static_cast<int>(rem % mdp.num_actions);
            rem /= mdp.num_actions;
          }
          const Policy det = Policy::deterministic(actions, mdp.num_actions);
          if (value_weighted(mdp, det, rho) < v_star_rho - 1e-8)
            return "a deterministic policy beats policy iteration on " +
                   describe(battery.specs[i]);
        }
      }
    }
    return "";
  });

  run.check("stationary_distribution", [&]() -> std::string {
    for (std::size_t i = 0; i < std::min<std::size_t>(battery.mdps.size(), 5);
         ++i) {
      const Dmdp& mdp = battery.mdps[i];
      const Policy pi = Policy::uniform(mdp.num_states, mdp.num_actions);
      VectorXd d;
      try {
        d = stationary_distribution(mdp, pi);
      } catch (const NonUniqueStationaryDistribution&) {
        continue;  // legitimately non-ergodic; skip
      }
      const MatrixXd p = induced_dynamics(mdp, pi).chain;
      const double residual =
          (d.transpose() * p - d.transpose()).lpNorm<Eigen::Infinity>();
      if (residual > 1e-9)
        return "stationary residual " + std::to_string(residual) + " on " +
               describe(battery.specs[i]);
      // Cesaro power-average oracle.
      VectorXd avg = VectorXd::Zero(mdp.num_states);
      const int iters = 20000;
      VectorXd row = uniform_distribution(mdp.num_states);
      for (int t = 0; t < iters; ++t) {
        avg += row;
        row = (row.transpose() * p).transpose();
      }
      avg /= iters;
      if ((avg - d).lpNorm<Eigen::Infinity>() > 1e-3)
        return "Cesaro oracle mismatch on " + describe(battery.specs[i]);
    }
    return "";
  });

  run.check("pmd_run_invariants", [&]() -> std::string {
    const std::size_t n_run = opts.full ? 10 : 4;
    for (std::size_t i = 0; i < n_run && i < battery.mdps.size(); ++i) {
      const Dmdp& mdp = battery.mdps[i];
      const VectorXd rho = uniform_distribution(mdp.num_states);
      const auto ref = optimal_reference(mdp, rho);
      for (Bregman kind : {Bregman::Euclidean, Bregman::Kl}) {
        PmdOptions po;
        po.kind = kind;
        po.steps = opts.full ? 100 : 50;
        po.schedule = StepSchedule::constant(1.0);
        auto trace = pmd_run(mdp, rho, po, &ref);
        if (!trace.ok())
          return "pmd constant-schedule violation '" +
                 trace.violations.front().check + "' at k=" +
                 std::to_string(trace.violations.front().k) + " on " +
                 describe(battery.specs[i]);
        po.schedule = StepSchedule::geometric();
        trace = pmd_run(mdp, rho, po, &ref);
        if (!trace.ok())
          return "pmd geometric-schedule violation '" +
                 trace.violations.front().check + "' at k=" +
                 std::to_string(trace.violations.front().k) + " on " +
                 describe(battery.specs[i]);
        // theta_k <= theta_rho for strictly positive rho.
        for (const auto& r : trace.records)
          if (r.theta_k && *r.theta_k > ref.theta_rho + Tol::bound_slack)
            return "theta_k exceeds theta_rho at k=" + std::to_string(r.k) +
                   " on " + describe(battery.specs[i]);
      }
    }
    return "";
  });

  run.check("ppg_run_invariants", [&]() -> std::string {
    const std::size_t n_run = opts.full ? 10 : 3;
    for (std::size_t i = 0; i < n_run && i < battery.mdps.size(); ++i) {
      const Dmdp& mdp = battery.mdps[i];
      const VectorXd rho = uniform_distribution(mdp.num_states);
      const auto ref = optimal_reference(mdp, rho);
      PpgOptions po;
      po.steps = opts.full ? 200 : 60;
      const auto trace = ppg_run(mdp, rho, rho, po, &ref);
      if (!trace.ok())
        return "ppg violation '" + trace.violations.front().check +
               "' at k=" + std::to_string(trace.violations.front().k) +
               " on " + describe(battery.specs[i]);
    }
    return "";
  });

  if (opts.full) {
    run.check("sampling_trials", [&]() -> std::string {
      const Dmdp mdp = generate(InstanceSpec::random(4, 2, 1.0, 0.8, 71));
      CounterRng rng(opts.seed, 0x5A37ull);
      const Policy pi = random_interior_policy(mdp, rng);
      // H=1 is exactly R(s,a).
      for (int s = 0; s < mdp.num_states; ++s)
        for (int a = 0; a < mdp.num_actions; ++a)
          if (std::abs(rollout_q_estimate(mdp, pi, s, a, 1, 7, 3) -
                       mdp.reward(s, a)) > 1e-12)
            return "H=1 rollout is not R(s,a)";
      // Determinism under threading.
      SamplingPlan plan;
      plan.horizon_H = 20;
      plan.batch_M = 2000;
      const QTable q1 = estimate_q_table(mdp, pi, plan, 99, RolloutMode::Auto, 1);
      const QTable q2 = estimate_q_table(mdp, pi, plan, 99, RolloutMode::Auto, 4);
      if (q1.values != q2.values) return "estimate_q_table not thread-invariant";
      // Accuracy sanity at a generous radius.
      const MatrixXd q_exact = q_function(mdp, pi).values;
      if ((q1.values - q_exact).lpNorm<Eigen::Infinity>() > 0.25)
        return "rollout estimate implausibly far from exact Q";
      return "";
    });
  }

  return report;
}

}  // namespace mdpopt
