#include "mdpopt/sampling.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>
#include <thread>
#include <vector>

#include "mdpopt/rng.hpp"

namespace mdpopt {

namespace {

// Stream-id tags keeping the aggregated draws disjoint from the
// per-trajectory ones.
constexpr std::uint64_t kAggStream = 0xA99A99A99A99A99Aull;
constexpr std::uint64_t kNoiseStream = 0x6E6F697365ull;
constexpr std::uint64_t kRolloutIter = 0x726F6C6C6F7574ull;

// Below this batch size the per-trajectory path is cheap enough.
constexpr long long kAggregateThreshold = 100000;

// Precomputed inverse-CDF tables for one MDP + policy pair.
struct CdfTables {
  MatrixXd trans_cum;   // row s*A+a: cumulative P(.|s,a)
  MatrixXd policy_cum;  // row s: cumulative pi_s

  CdfTables(const Dmdp& mdp, const Policy& pi) {
    trans_cum.resize(mdp.transition.rows(), mdp.transition.cols());
    for (int r = 0; r < mdp.transition.rows(); ++r) {
      double c = 0.0;
      for (int j = 0; j < mdp.transition.cols(); ++j)
        trans_cum(r, j) = c += mdp.transition(r, j);
    }
    policy_cum.resize(pi.num_states(), pi.num_actions());
    for (int s = 0; s < pi.num_states(); ++s) {
      double c = 0.0;
      for (int a = 0; a < pi.num_actions(); ++a)
        policy_cum(s, a) = c += pi.probs(s, a);
    }
  }

  static int pick(const MatrixXd& cum, int row, double u) {
    int lo = 0, hi = static_cast<int>(cum.cols()) - 1;
    while (lo < hi) {
      const int mid = (lo + hi) / 2;
      if (cum(row, mid) > u)
        hi = mid;
      else
        lo = mid + 1;
    }
    return lo;
  }
};

void check_rollout_args(const Dmdp& mdp, const Policy& pi, int s, int a,
                        int horizon_h, long long batch_m) {
  if (pi.num_states() != mdp.num_states || pi.num_actions() != mdp.num_actions)
    throw std::invalid_argument("rollout: policy shape mismatch");
  if (s < 0 || s >= mdp.num_states || a < 0 || a >= mdp.num_actions)
    throw std::invalid_argument("rollout: (s,a) out of range");
  if (horizon_h < 1 || batch_m < 1)
    throw std::invalid_argument("rollout: H and M must be >= 1");
}

double rollout_one_sa(const Dmdp& mdp, const CdfTables& cdf, int s, int a,
                      int horizon_h, long long batch_m,
                      std::uint64_t master_seed) {
  const std::uint64_t sa = static_cast<std::uint64_t>(mdp.sa_row(s, a));
  double total = 0.0;
  for (long long i = 0; i < batch_m; ++i) {
    CounterRng rng(master_seed, sa, static_cast<std::uint64_t>(i));
    int st = s, at = a;
    double ret = 0.0, discount = 1.0;
    for (int t = 0; t < horizon_h; ++t) {
      ret += discount * mdp.reward(st, at);
      if (t + 1 == horizon_h) break;
      discount *= mdp.gamma;
      st = CdfTables::pick(cdf.trans_cum, mdp.sa_row(st, at), rng.uniform());
      at = CdfTables::pick(cdf.policy_cum, st, rng.uniform());
    }
    total += ret;
  }
  return total / static_cast<double>(batch_m);
}

// Draw multinomial counts for `n` items over the probabilities in row
// `row` of `probs` via sequential conditional binomials.
void multinomial_row(long long n, const MatrixXd& probs, int row,
                     CounterRng& rng, std::vector<long long>& out) {
  const int m = static_cast<int>(probs.cols());
  out.assign(m, 0);
  double rest = 1.0;
  long long left = n;
  for (int j = 0; j < m && left > 0; ++j) {
    if (j == m - 1 || rest <= 0.0) {
      out[j] = left;
      left = 0;
      break;
    }
    const double p = std::clamp(probs(row, j) / rest, 0.0, 1.0);
    long long c;
    if (p >= 1.0) {
      c = left;
    } else if (p <= 0.0) {
      c = 0;
    } else {
      std::binomial_distribution<long long> bin(left, p);
      c = bin(rng);
    }
    out[j] = c;
    left -= c;
    rest -= probs(row, j);
  }
}

// Evolve the state-count vector of the whole batch at once. The counts
// after t steps are jointly multinomial over trajectories, and only the
// per-step sum of rewards enters the estimate, so the batch mean has
// exactly the same distribution as the per-trajectory path.
double rollout_aggregated_sa(const Dmdp& mdp, const Policy& pi, int s, int a,
                             int horizon_h, long long batch_m,
                             std::uint64_t master_seed) {
  const std::uint64_t sa = static_cast<std::uint64_t>(mdp.sa_row(s, a));
  CounterRng rng(master_seed, sa, kAggStream);

  double total = static_cast<double>(batch_m) * mdp.reward(s, a);
  std::vector<long long> states(mdp.num_states, 0);
  std::vector<long long> scratch, actions;
  if (horizon_h > 1)
    multinomial_row(batch_m, mdp.transition, mdp.sa_row(s, a), rng, states);

  double discount = 1.0;
  std::vector<long long> next(mdp.num_states, 0);
  for (int t = 1; t < horizon_h; ++t) {
    discount *= mdp.gamma;
    std::fill(next.begin(), next.end(), 0);
    for (int st = 0; st < mdp.num_states; ++st) {
      if (states[st] == 0) continue;
      multinomial_row(states[st], pi.probs, st, rng, actions);
      for (int at = 0; at < mdp.num_actions; ++at) {
        if (actions[at] == 0) continue;
        total += discount * static_cast<double>(actions[at]) *
                 mdp.reward(st, at);
        if (t + 1 == horizon_h) continue;
        multinomial_row(actions[at], mdp.transition, mdp.sa_row(st, at), rng,
                        scratch);
        for (int sp = 0; sp < mdp.num_states; ++sp) next[sp] += scratch[sp];
      }
    }
    states.swap(next);
  }
  return total / static_cast<double>(batch_m);
}

}  // namespace

SamplingPlan plan_sampling(double gamma, double theta_rho, double eps,
                           double delta, long num_sa) {
  if (!(gamma > 0.0 && gamma < 1.0))
    throw std::invalid_argument("plan_sampling: gamma must be in (0,1)");
  if (!(eps > 0.0)) throw std::invalid_argument("plan_sampling: eps must be > 0");
  if (!(delta > 0.0 && delta < 1.0))
    throw std::invalid_argument("plan_sampling: delta must be in (0,1)");
  if (!std::isfinite(theta_rho) || !(theta_rho >= 1.0))
    throw std::invalid_argument("plan_sampling: theta_rho must be finite, >= 1");
  if (num_sa < 1)
    throw std::invalid_argument("plan_sampling: num_sa must be >= 1");

  const double om = 1.0 - gamma;
  SamplingPlan plan;
  plan.target_eps = eps;
  plan.confidence_delta = delta;
  plan.outer_iters_K = static_cast<int>(
      std::max(1.0, std::ceil(theta_rho * std::log(4.0 / (om * eps)))));
  plan.horizon_H = static_cast<int>(std::max(
      1.0, std::ceil(std::log(16.0 * theta_rho / (om * om * eps)) / om)));
  const double pow_term = std::exp(-2.0 * plan.horizon_H * std::log(gamma));
  const double m_real = std::ceil(
      pow_term / 2.0 *
      std::log(2.0 * plan.outer_iters_K * static_cast<double>(num_sa) / delta));
  if (!(m_real < 9.0e18))
    throw std::runtime_error(
        "plan_sampling: batch size gamma^{-2H}/2*log(...) overflows with H=" +
        std::to_string(plan.horizon_H));
  plan.batch_M = std::max(1ll, static_cast<long long>(m_real));
  return plan;
}

double rollout_q_estimate(const Dmdp& mdp, const Policy& pi, int s, int a,
                          int horizon_h, long long batch_m,
                          std::uint64_t master_seed) {
  check_rollout_args(mdp, pi, s, a, horizon_h, batch_m);
  const CdfTables cdf(mdp, pi);
  return rollout_one_sa(mdp, cdf, s, a, horizon_h, batch_m, master_seed);
}

QTable estimate_q_table(const Dmdp& mdp, const Policy& pi,
                        const SamplingPlan& plan, std::uint64_t master_seed,
                        RolloutMode mode, int num_threads) {
  check_rollout_args(mdp, pi, 0, 0, plan.horizon_H, plan.batch_M);
  const bool aggregate =
      mode == RolloutMode::Aggregated ||
      (mode == RolloutMode::Auto && plan.batch_M > kAggregateThreshold);
  const CdfTables cdf(mdp, pi);

  QTable q;
  q.estimated = true;
  q.values.resize(mdp.num_states, mdp.num_actions);
  const int num_sa = mdp.num_states * mdp.num_actions;
  auto worker = [&](int begin, int end) {
    for (int idx = begin; idx < end; ++idx) {
      const int s = idx / mdp.num_actions;
      const int a = idx % mdp.num_actions;
      q.values(s, a) =
          aggregate ? rollout_aggregated_sa(mdp, pi, s, a, plan.horizon_H,
                                            plan.batch_M, master_seed)
                    : rollout_one_sa(mdp, cdf, s, a, plan.horizon_H,
                                     plan.batch_M, master_seed);
    }
  };

  if (num_threads <= 1 || num_sa == 1) {
    worker(0, num_sa);
  } else {
    const int workers = std::min(num_threads, num_sa);
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) {
      const int begin = num_sa * w / workers;
      const int end = num_sa * (w + 1) / workers;
      pool.emplace_back(worker, begin, end);
    }
    for (auto& t : pool) t.join();
  }
  return q;
}

QOracle QOracle::injected_noise(double tau, std::uint64_t seed) {
  if (!(tau >= 0.0))
    throw std::invalid_argument("injected_noise: tau must be >= 0");
  QOracle o;
  o.tag = Tag::InjectedNoise;
  o.tau = tau;
  o.seed = seed;
  return o;
}

QOracle QOracle::rollout(const SamplingPlan& plan, std::uint64_t seed) {
  QOracle o;
  o.tag = Tag::Rollout;
  o.plan = plan;
  o.seed = seed;
  return o;
}

RunTrace inexact_pmd_run(const Dmdp& mdp, const VectorXd& rho,
                         const PmdOptions& opts, const QOracle& oracle,
                         const OptimalReference* ref, int num_threads) {
  PmdOracle po;
  switch (oracle.tag) {
    case QOracle::Tag::Exact:
      break;  // empty q_hat: exact loop, bitwise identical to pmd_run
    case QOracle::Tag::InjectedNoise: {
      const double tau = oracle.tau;
      const std::uint64_t seed = oracle.seed;
      po.q_hat = [&mdp, tau, seed](const Policy& pi, int k) {
        QTable q = q_function(mdp, pi);
        const double cap = 1.0 / (1.0 - mdp.gamma);
        CounterRng rng(seed, kNoiseStream, static_cast<std::uint64_t>(k));
        for (int s = 0; s < q.values.rows(); ++s)
          for (int a = 0; a < q.values.cols(); ++a)
            q.values(s, a) = std::clamp(q.values(s, a) + rng.uniform(-tau, tau),
                                        0.0, cap);
        q.estimated = true;
        return q;
      };
      po.tau = tau;
      po.record_q_err = true;
      po.label = "injected_noise";
      break;
    }
    case QOracle::Tag::Rollout: {
      const SamplingPlan plan = oracle.plan;
      const std::uint64_t seed = oracle.seed;
      po.q_hat = [&mdp, plan, seed, num_threads](const Policy& pi, int k) {
        CounterRng derive(seed, kRolloutIter, static_cast<std::uint64_t>(k));
        return estimate_q_table(mdp, pi, plan, derive(), RolloutMode::Auto,
                                num_threads);
      };
      po.record_q_err = true;
      po.label = "rollout";
      break;
    }
  }
  return pmd_loop(mdp, rho, opts, po, ref);
}

}  // namespace mdpopt
