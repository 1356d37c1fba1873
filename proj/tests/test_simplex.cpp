#include <doctest.h>

#include <cmath>
#include <limits>

#include "helpers.hpp"
#include "mdpopt/rng.hpp"
#include "mdpopt/simplex.hpp"

using namespace mdpopt;

namespace {

// Exhaustive-support KKT oracle: for every nonempty support, shift the
// kept coordinates uniformly so they sum to one, discard infeasible
// candidates, return the closest feasible one.
VectorXd projection_oracle(const VectorXd& v) {
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

VectorXd vec2(double a, double b) {
  VectorXd v(2);
  v << a, b;
  return v;
}

VectorXd vec3(double a, double b, double c) {
  VectorXd v(3);
  v << a, b, c;
  return v;
}

}  // namespace

TEST_CASE("projection leaves feasible points unchanged") {
  const VectorXd v = vec3(0.2, 0.5, 0.3);
  CHECK((project_simplex(v) - v).lpNorm<Eigen::Infinity>() <= 1e-15);
}

TEST_CASE("projection snaps (2,0) to the nearest vertex") {
  const VectorXd p = project_simplex(vec2(2.0, 0.0));
  CHECK(p(0) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(p(1) == doctest::Approx(0.0).epsilon(1e-15));
}

TEST_CASE("projection clips the negative coordinate") {
  const VectorXd p = project_simplex(vec3(0.6, 0.4, -0.2));
  CHECK(p(0) == doctest::Approx(0.6).epsilon(1e-15));
  CHECK(p(1) == doctest::Approx(0.4).epsilon(1e-15));
  CHECK(p(2) == doctest::Approx(0.0).epsilon(1e-15));
}

TEST_CASE("projection matches the exhaustive KKT oracle") {
  CounterRng rng(2024, 0x51);
  for (int t = 0; t < 500; ++t) {
    const int n = 2 + static_cast<int>(rng() % 11);  // up to 12
    VectorXd v(n);
    for (int i = 0; i < n; ++i) v(i) = rng.uniform(-2.0, 2.0);
    const VectorXd p = project_simplex(v);
    const VectorXd oracle = projection_oracle(v);
    CHECK((p - oracle).lpNorm<Eigen::Infinity>() <= 1e-9);
    CHECK(std::abs(p.sum() - 1.0) <= 1e-9);
    CHECK(p.minCoeff() >= 0.0);
  }
}

TEST_CASE("projection rejects non-finite input") {
  CHECK_THROWS_AS(
      project_simplex(vec2(std::numeric_limits<double>::quiet_NaN(), 0.0)),
      std::invalid_argument);
}

TEST_CASE("mirror step with eta = 0 is the identity") {
  const VectorXd pi = vec3(0.2, 0.5, 0.3);
  const VectorXd q = vec3(3.0, 1.0, 2.0);
  for (Bregman kind : {Bregman::Euclidean, Bregman::Kl})
    CHECK((mirror_step(kind, pi, q, 0.0).probs - pi)
              .lpNorm<Eigen::Infinity>() <= 1e-15);
}

TEST_CASE("KL step is invariant to constant Q shifts") {
  const VectorXd pi = vec3(0.2, 0.5, 0.3);
  const VectorXd q = vec3(4.0, 4.0, 4.0);
  CHECK((mirror_step(Bregman::Kl, pi, q, 1.3).probs - pi)
            .lpNorm<Eigen::Infinity>() <= 1e-12);
}

TEST_CASE("KL step hand example: weights (0.5, 0.25) normalize to (2/3, 1/3)") {
  const auto out =
      mirror_step(Bregman::Kl, vec2(0.5, 0.5), vec2(0.0, 1.0), std::log(2.0));
  CHECK(out.probs(0) == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
  CHECK(out.probs(1) == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
  CHECK(out.floor_events == 0);
}

TEST_CASE("Euclidean step hand example") {
  const auto out =
      mirror_step(Bregman::Euclidean, vec2(0.5, 0.5), vec2(1.0, 0.0), 0.25);
  CHECK(out.probs(0) == doctest::Approx(0.375).epsilon(1e-15));
  CHECK(out.probs(1) == doctest::Approx(0.625).epsilon(1e-15));
}

TEST_CASE("KL step stays strictly interior even at huge step sizes") {
  const auto out =
      mirror_step(Bregman::Kl, vec2(0.5, 0.5), vec2(0.0, 1.0), 1e6);
  CHECK(out.probs.minCoeff() > 0.0);
  CHECK(std::abs(out.probs.sum() - 1.0) <= 1e-12);
  CHECK(out.floor_events >= 1);  // the losing action underflows
}

TEST_CASE("mirror step input validation") {
  CHECK_THROWS_AS(mirror_step(Bregman::Kl, vec2(1.0, 0.0), vec2(0.0, 1.0), 1.0),
                  std::invalid_argument);
  CHECK_THROWS_AS(
      mirror_step(Bregman::Euclidean, vec2(0.5, 0.5), vec2(0.0, 1.0), -1.0),
      std::invalid_argument);
}

TEST_CASE("three-point inequality holds at randomized points") {
  CounterRng rng(99, 0x3B);
  for (int t = 0; t < 500; ++t) {
    const int n = 2 + static_cast<int>(rng() % 4);
    VectorXd pi(n), u(n), q(n);
    double sp = 0.0, su = 0.0;
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
      const VectorXd plus = mirror_step(kind, pi, q, eta).probs;
      const double lhs = eta * q.dot(plus) + bregman_divergence(kind, plus, pi);
      const double rhs = eta * q.dot(u) + bregman_divergence(kind, u, pi) -
                         bregman_divergence(kind, u, plus);
      CHECK(lhs <= rhs + 1e-9);
    }
  }
}

TEST_CASE("Bregman divergences: basic values") {
  const VectorXd p = vec2(1.0, 0.0), q = vec2(0.0, 1.0), h = vec2(0.5, 0.5);
  for (Bregman kind : {Bregman::Euclidean, Bregman::Kl})
    CHECK(bregman_divergence(kind, h, h) == doctest::Approx(0.0));
  CHECK(bregman_divergence(Bregman::Euclidean, p, q) == doctest::Approx(1.0));
  CHECK(bregman_divergence(Bregman::Kl, p, h) ==
        doctest::Approx(std::log(2.0)).epsilon(1e-12));
  // Mass where the reference has none: +infinity, not an exception.
  CHECK(std::isinf(bregman_divergence(Bregman::Kl, p, q)));
}

TEST_CASE("divergences are nonnegative and vanish only at equality") {
  CounterRng rng(7, 0xD1);
  for (int t = 0; t < 200; ++t) {
    VectorXd a(3), b(3);
    double sa = 0.0, sb = 0.0;
    for (int i = 0; i < 3; ++i) {
      a(i) = rng.gamma(1.0) + 1e-6;
      b(i) = rng.gamma(1.0) + 1e-6;
      sa += a(i);
      sb += b(i);
    }
    a /= sa;
    b /= sb;
    for (Bregman kind : {Bregman::Euclidean, Bregman::Kl}) {
      const double d = bregman_divergence(kind, a, b);
      CHECK(d >= 0.0);
      if ((a - b).lpNorm<Eigen::Infinity>() > 1e-6) CHECK(d > 0.0);
    }
  }
}

TEST_CASE("weighted divergence: standard bounds") {
  const int ns = 4, na = 5;
  const Policy det = Policy::deterministic({1, 4, 0, 2}, na);
  const Policy unif = Policy::uniform(ns, na);
  const VectorXd w = uniform_distribution(ns);
  CHECK(weighted_divergence(Bregman::Kl, det, det, w) == doctest::Approx(0.0));
  // KL against the uniform reference is at most log |A|.
  CHECK(weighted_divergence(Bregman::Kl, det, unif, w) <=
        std::log(double(na)) + 1e-12);
  // Euclidean divergence between any two rows is at most 1.
  const Policy other = Policy::deterministic({0, 0, 1, 1}, na);
  CHECK(weighted_divergence(Bregman::Euclidean, det, other, w) <= 1.0 + 1e-12);
}
