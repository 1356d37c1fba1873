#pragma once

#include <cstdint>

#include "mdpopt/optimizers.hpp"
#include "mdpopt/types.hpp"

namespace mdpopt {

struct SamplingPlan {
  int horizon_H = 1;
  long long batch_M = 1;
  int outer_iters_K = 1;
  double target_eps = 0.0;
  double confidence_delta = 0.0;
};

// Closed-form plan: K = ceil(theta log(4/((1-gamma) eps))),
// H = ceil(log(16 theta / ((1-gamma)^2 eps)) / (1-gamma)),
// M = ceil(gamma^{-2H}/2 * log(2 K num_sa / delta)).
// Throws when gamma^{-2H} would overflow the batch count.
SamplingPlan plan_sampling(double gamma, double theta_rho, double eps,
                           double delta, long num_sa);

// Monte-Carlo estimate of Q(s,a): mean over M truncated trajectories of
// horizon H started at (s,a), actions a_t ~ pi thereafter. Trajectory i
// consumes the counter-derived stream (master_seed, sa_index, i), so the
// result is independent of evaluation order.
double rollout_q_estimate(const Dmdp& mdp, const Policy& pi, int s, int a,
                          int horizon_h, long long batch_m,
                          std::uint64_t master_seed);

enum class RolloutMode {
  Auto,           // per-trajectory when M is small, aggregated otherwise
  PerTrajectory,  // matches rollout_q_estimate bitwise
  Aggregated,     // multinomial count evolution; same distribution of the
                  // batch mean, feasible for the very large M the Hoeffding
                  // plans demand
};

// Q-hat for every (s,a). Pure function of (mdp, pi, plan, master_seed,
// mode); num_threads only partitions the (s,a) grid and never changes the
// output.
QTable estimate_q_table(const Dmdp& mdp, const Policy& pi,
                        const SamplingPlan& plan, std::uint64_t master_seed,
                        RolloutMode mode = RolloutMode::Auto,
                        int num_threads = 1);

struct QOracle {
  enum class Tag { Exact, InjectedNoise, Rollout };
  Tag tag = Tag::Exact;
  double tau = 0.0;          // InjectedNoise only
  std::uint64_t seed = 0;
  SamplingPlan plan;         // Rollout only

  static QOracle exact() { return {}; }
  // Q_hat = clip(Q + u, 0, 1/(1-gamma)) with u uniform in [-tau, tau]
  // per entry: Assumption 1 holds deterministically.
  static QOracle injected_noise(double tau, std::uint64_t seed);
  static QOracle rollout(const SamplingPlan& plan, std::uint64_t seed);
};

RunTrace inexact_pmd_run(const Dmdp& mdp, const VectorXd& rho,
                         const PmdOptions& opts, const QOracle& oracle,
                         const OptimalReference* ref, int num_threads = 1);

}  // namespace mdpopt
