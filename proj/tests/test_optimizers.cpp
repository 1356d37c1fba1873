#include <doctest.h>

#include <cmath>

#include "helpers.hpp"
#include "mdpopt/mdp_core.hpp"
#include "mdpopt/optimizers.hpp"
#include "mdpopt/solvers.hpp"

using namespace mdpopt;
using namespace mdpopt::testing;

TEST_CASE("step schedules: closed-form values") {
  CHECK(step_eta(StepSchedule::constant(2.0), 17, 0.9, 5.0) == 2.0);
  CHECK(step_eta(StepSchedule::geometric(1.0), 3, 0.5, 5.0) ==
        doctest::Approx(8.0).epsilon(1e-15));
  CHECK(step_eta(StepSchedule::theta_ratio(1.0), 2, 0.9, 10.0) ==
        doctest::Approx(std::pow(10.0 / 9.0, 2)).epsilon(1e-12));
  CHECK_THROWS_AS(step_eta(StepSchedule::geometric(1.0), 1, 0.0, 5.0),
                  std::invalid_argument);
  CHECK_THROWS_AS(step_eta(StepSchedule::theta_ratio(1.0), 1, 0.9, 1.0),
                  std::invalid_argument);
}

TEST_CASE("bound evaluators match an independent re-implementation") {
  // Second implementations written without reference to the library code.
  auto ppg_env = [](int k, int S, int A, double c, double g) {
    return 128.0 * S * A * std::pow(c, 2) / (double(k) * std::pow(1.0 - g, 5));
  };
  auto weakdom = [](int k, double L, double om, double d0) {
    return std::max(4.0 * L / (om * double(k)),
                    std::pow(0.5, 0.5 * k) * d0);
  };
  auto sublin = [](int k, double d0, double eta, double g) {
    return (d0 / (eta * (1.0 - g)) + std::pow(1.0 - g, -2)) / double(k + 1);
  };
  auto linear = [](int k, double th, double de0, double d0, double e0,
                   double g) {
    return std::pow(1.0 - 1.0 / th, k) * (de0 + d0 / (e0 * g));
  };
  auto inexact = [](int k, double th, double g, double tau) {
    return std::pow(1.0 - 1.0 / th, k) * 2.0 / (1.0 - g) +
           4.0 * th * tau / (1.0 - g);
  };
  auto sampled = [](int K, int H, double th, double g) {
    return std::pow(1.0 - 1.0 / th, K) * 2.0 / (1.0 - g) +
           8.0 * th * std::pow(g, H) / std::pow(1.0 - g, 2);
  };

  CHECK(bound_ppg_sublinear(100, 5, 3, 2.0, 0.9) ==
        doctest::Approx(ppg_env(100, 5, 3, 2.0, 0.9)).epsilon(1e-14));
  CHECK(bound_ppg_sublinear(7, 12, 4, 1.5, 0.8) ==
        doctest::Approx(ppg_env(7, 12, 4, 1.5, 0.8)).epsilon(1e-14));
  CHECK(bound_weak_dominance(9, 120.0, 0.01, 3.0) ==
        doctest::Approx(weakdom(9, 120.0, 0.01, 3.0)).epsilon(1e-14));
  CHECK(bound_pmd_sublinear(25, 1.1, 0.7, 0.9) ==
        doctest::Approx(sublin(25, 1.1, 0.7, 0.9)).epsilon(1e-14));
  CHECK(bound_pmd_linear(40, 10.0, 2.0, 1.1, 0.5, 0.9) ==
        doctest::Approx(linear(40, 10.0, 2.0, 1.1, 0.5, 0.9)).epsilon(1e-14));
  CHECK(bound_inexact_pmd(12, 10.0, 0.9, 0.01) ==
        doctest::Approx(inexact(12, 10.0, 0.9, 0.01)).epsilon(1e-14));
  CHECK(bound_sampled(15, 15, 4.0, 0.5) ==
        doctest::Approx(sampled(15, 15, 4.0, 0.5)).epsilon(1e-14));
}

TEST_CASE("bound evaluators: limiting behavior") {
  // pmd_linear -> 0 as k grows.
  CHECK(bound_pmd_linear(5000, 10.0, 1.0, 1.0, 1.0, 0.9) < 1e-200);
  // theta = 1/(1-gamma) makes the contraction factor exactly gamma.
  const double theta = 1.0 / (1.0 - 0.9);
  CHECK(1.0 - 1.0 / theta == doctest::Approx(0.9).epsilon(1e-15));
}

TEST_CASE("smoothness parameters") {
  const Dmdp mdp = random_mdp(5, 3, 0.9, 1);
  const auto p = smoothness_params(mdp, 2.0);
  CHECK(p.lipschitz_L ==
        doctest::Approx(2.0 * 0.9 * 3.0 / std::pow(0.1, 3)).epsilon(1e-12));
  CHECK(p.omega ==
        doctest::Approx(std::pow(0.1, 2) / (16.0 * 5.0 * 4.0)).epsilon(1e-12));
}

TEST_CASE("gradient mapping vanishes at a strictly optimal vertex") {
  const Dmdp mdp = generate(InstanceSpec::chain(3, 0.9));
  const auto ref = optimal_reference(mdp, uniform_distribution(3));
  const auto p = smoothness_params(mdp, ref.c_star_rho);
  const auto gm =
      gradient_mapping(mdp, ref.pi_star, uniform_distribution(3), p.lipschitz_L);
  CHECK(gm.norm <= 1e-9);
}

TEST_CASE("gradient mapping at gamma = 0 moves toward the greedy action") {
  Dmdp mdp = random_mdp(3, 3, 0.0, 10);
  const Policy pi = Policy::uniform(3, 3);
  // Use an arbitrary positive L; the gradient is mu_s R_s.
  const auto gm = gradient_mapping(mdp, pi, uniform_distribution(3), 1e3);
  for (int s = 0; s < 3; ++s) {
    int best = 0;
    for (int a = 1; a < 3; ++a)
      if (mdp.reward(s, a) < mdp.reward(s, best)) best = a;
    CHECK(gm.t_l.probs(s, best) > pi.probs(s, best));
  }
}

TEST_CASE("gradient-mapping descent inequality on a random instance") {
  const Dmdp mdp = random_mdp(4, 3, 0.9, 11);
  const VectorXd mu = uniform_distribution(4);
  const auto p = smoothness_params(mdp, 1.0);
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const Policy pi = random_interior_policy(4, 3, 3000 + seed);
    const auto gm = gradient_mapping(mdp, pi, mu, p.lipschitz_L);
    const double decrease =
        value_weighted(mdp, pi, mu) - value_weighted(mdp, gm.t_l, mu);
    CHECK(decrease >= gm.norm * gm.norm / (2.0 * p.lipschitz_L) - 1e-9);
  }
}

TEST_CASE("ppg: single-action instance yields a constant trace") {
  const Dmdp mdp = two_state_cycle(0.8);
  const VectorXd rho = uniform_distribution(2);
  const auto ref = optimal_reference(mdp, rho);
  PpgOptions opts;
  opts.steps = 20;
  const auto trace = ppg_run(mdp, rho, rho, opts, &ref);
  CHECK(trace.ok());
  REQUIRE(trace.records.size() == 21);
  for (const auto& r : trace.records)
    CHECK(*r.delta_k == doctest::Approx(*trace.records[0].delta_k));
}

TEST_CASE("ppg: one-state bandit matches a hand-rolled reference trajectory") {
  const Dmdp mdp = one_state_two_action(0.5);
  const VectorXd rho = point_mass(1, 0);
  const auto ref = optimal_reference(mdp, rho);
  PpgOptions opts;
  opts.steps = 200;
  const auto trace = ppg_run(mdp, rho, rho, opts, &ref);
  CHECK(trace.ok());

  // Closed-form reference: V = 2 p1 (gamma = 1/2, regret (0,1)), so
  // Q = (p1, 1 + p1), d = 1, grad = 2 Q. One projected step on the
  // 2-simplex moves p1 by the centered gradient difference, then clips.
  const double eta = std::pow(0.5, 3) / (2.0 * 0.5 * 2.0);
  double p1 = 0.5;
  double prev_delta = 1e300;
  for (std::size_t k = 0; k < trace.records.size(); ++k) {
    const auto& rec = trace.records[k];
    CHECK(*rec.v_rho == doctest::Approx(2.0 * p1).epsilon(1e-10));
    CHECK(*rec.delta_k <= prev_delta + 1e-15);  // monotone decreasing
    if (k >= 1)
      CHECK(*rec.delta_k <=
            bound_ppg_sublinear(static_cast<int>(k), 1, 2, ref.c_star_rho,
                           mdp.gamma) +
                1e-9);
    prev_delta = *rec.delta_k;
    const double q0 = p1, q1 = 1.0 + p1;  // Q = R + gamma * V
    const double g0 = 2.0 * q0, g1 = 2.0 * q1;
    // Projection of (p0 - eta g0, p1 - eta g1) onto the 2-simplex when
    // both coordinates stay nonnegative: add back half the lost mass.
    double x0 = (1.0 - p1) - eta * g0, x1 = p1 - eta * g1;
    const double shift = (1.0 - x0 - x1) / 2.0;
    x0 += shift;
    x1 += shift;
    if (x1 < 0.0) x1 = 0.0;
    if (x1 > 1.0) x1 = 1.0;
    p1 = x1;
  }
  CHECK(*trace.records.back().delta_k <= 1e-2);
}

TEST_CASE("ppg: random instance satisfies both theorem envelopes") {
  const Dmdp mdp = random_mdp(5, 3, 0.9, 500);
  const VectorXd rho = uniform_distribution(5);
  const auto ref = optimal_reference(mdp, rho);
  PpgOptions opts;
  opts.steps = 500;
  const auto trace = ppg_run(mdp, rho, rho, opts, &ref);
  CHECK(trace.ok());  // envelope, descent, and certificate checks ran internally
  const auto p = smoothness_params(mdp, ref.c_star_rho);
  const double delta0 = *trace.records[0].delta_k;
  for (const auto& r : trace.records) {
    if (r.k < 1) continue;
    CHECK(*r.delta_k <=
          bound_ppg_sublinear(r.k, 5, 3, ref.c_star_rho, mdp.gamma) + 1e-9);
    CHECK(*r.delta_k <=
          bound_weak_dominance(r.k, p.lipschitz_L, p.omega, delta0) + 1e-9);
  }
}

TEST_CASE("ppg: strong-dominance diagnostic with a tiny mu_hat") {
  const Dmdp mdp = random_mdp(4, 2, 0.85, 321);
  const VectorXd rho = uniform_distribution(4);
  const auto ref = optimal_reference(mdp, rho);
  PpgOptions opts;
  opts.steps = 100;
  opts.mu_hat = 1e-9;
  const auto trace = ppg_run(mdp, rho, rho, opts, &ref);
  CHECK(trace.ok());
}

TEST_CASE("pmd: constant step satisfies the sublinear theorem") {
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    const Dmdp mdp = random_mdp(5, 3, 0.9, 9000 + seed);
    const VectorXd rho = uniform_distribution(5);
    const auto ref = optimal_reference(mdp, rho);
    for (Bregman kind : {Bregman::Euclidean, Bregman::Kl}) {
      PmdOptions opts;
      opts.kind = kind;
      opts.steps = 200;
      const Policy pi0 = Policy::uniform(5, 3);
      const double dstar0 =
          weighted_divergence(kind, ref.pi_star, pi0, ref.d_rho_star);
      const double eta = std::max((1.0 - mdp.gamma) * dstar0, 1e-6);
      opts.schedule = StepSchedule::constant(eta);
      const auto trace = pmd_run(mdp, rho, opts, &ref);
      CHECK(trace.ok());
      // Clean form of the sublinear bound under eta >= (1-gamma) D*_0.
      for (const auto& r : trace.records)
        CHECK(*r.delta_k <=
              2.0 / ((r.k + 1) * std::pow(1.0 - mdp.gamma, 2)) + 1e-9);
    }
  }
}

TEST_CASE("pmd: geometric step satisfies the clean linear bound") {
  for (std::uint64_t seed : {4u, 5u}) {
    const Dmdp mdp = random_mdp(5, 3, 0.9, 9100 + seed);
    const VectorXd rho = uniform_distribution(5);
    const auto ref = optimal_reference(mdp, rho);
    for (Bregman kind : {Bregman::Euclidean, Bregman::Kl}) {
      PmdOptions opts;
      opts.kind = kind;
      opts.steps = 200;
      opts.schedule = StepSchedule::geometric();  // default eta0 and 1/gamma
      const auto trace = pmd_run(mdp, rho, opts, &ref);
      CHECK(trace.ok());
      for (const auto& r : trace.records)
        CHECK(*r.delta_k <=
              std::pow(1.0 - 1.0 / ref.theta_rho, r.k) * 2.0 /
                      (1.0 - mdp.gamma) +
                  1e-9);
    }
  }
}

TEST_CASE("pmd: master recursion verified from the recorded trace") {
  const Dmdp mdp = random_mdp(6, 3, 0.9, 515);
  const VectorXd rho = uniform_distribution(6);
  const auto ref = optimal_reference(mdp, rho);
  PmdOptions opts;
  opts.kind = Bregman::Kl;
  opts.steps = 60;
  opts.schedule = StepSchedule::geometric();
  const auto trace = pmd_run(mdp, rho, opts, &ref);
  CHECK(trace.ok());
  for (std::size_t k = 0; k + 1 < trace.records.size(); ++k) {
    const auto& cur = trace.records[k];
    const auto& nxt = trace.records[k + 1];
    const double lhs =
        *nxt.theta_k * (*nxt.delta_k - *cur.delta_k) + *cur.delta_k;
    const double rhs =
        (*cur.dstar_k - *nxt.dstar_k) / ((1.0 - mdp.gamma) * *cur.eta_k);
    CHECK(lhs <= rhs + 1e-9);
    // theta_k never exceeds theta_rho for strictly positive rho.
    CHECK(*cur.theta_k <= ref.theta_rho + 1e-9);
  }
}

TEST_CASE("pmd with a huge step reproduces policy iteration") {
  const Dmdp mdp = random_mdp(5, 3, 0.9, 616);
  const VectorXd rho = uniform_distribution(5);
  PmdOptions opts;
  opts.kind = Bregman::Euclidean;
  opts.steps = 1;
  opts.schedule = StepSchedule::constant(1e12);
  opts.check_bounds = false;

  // Walk 50 iterations, comparing each PMD step's greedy support against
  // the greedy improvement computed directly from Q(pi^k).
  Policy pi = Policy::uniform(5, 3);
  for (int k = 0; k < 50; ++k) {
    const MatrixXd q = q_function(mdp, pi).values;
    std::vector<int> greedy(5);
    for (int s = 0; s < 5; ++s) {
      int best = 0;
      for (int a = 1; a < 3; ++a)
        if (q(s, a) < q(s, best)) best = a;
      greedy[s] = best;
    }
    opts.pi0 = pi;
    const auto trace = pmd_run(mdp, rho, opts, nullptr);
    CHECK(trace.final_policy.greedy_support() == greedy);
    pi = trace.final_policy;
  }
}

TEST_CASE("pmd rejects KL geometry from a boundary start") {
  const Dmdp mdp = random_mdp(3, 2, 0.9, 717);
  PmdOptions opts;
  opts.kind = Bregman::Kl;
  opts.steps = 5;
  opts.schedule = StepSchedule::constant(1.0);
  opts.pi0 = Policy::deterministic({0, 1, 0}, 2);
  CHECK_THROWS_AS(pmd_run(mdp, uniform_distribution(3), opts, nullptr),
                  std::invalid_argument);
}

TEST_CASE("run traces index records consecutively from zero") {
  const Dmdp mdp = random_mdp(4, 2, 0.8, 818);
  PmdOptions opts;
  opts.steps = 30;
  opts.schedule = StepSchedule::constant(1.0);
  const auto trace = pmd_run(mdp, uniform_distribution(4), opts, nullptr);
  REQUIRE(trace.records.size() == 31);
  for (int k = 0; k <= 30; ++k) CHECK(trace.records[k].k == k);
}
