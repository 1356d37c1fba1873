#include "mdpopt/simplex.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

namespace mdpopt {

VectorXd project_simplex(const VectorXd& v) {
  const int n = static_cast<int>(v.size());
  if (n < 1) throw std::invalid_argument("project_simplex: empty input");
  if (!v.allFinite())
    throw std::invalid_argument("project_simplex: non-finite input");

  std::vector<double> u(v.data(), v.data() + n);
  std::sort(u.begin(), u.end(), std::greater<double>());
  double cumsum = 0.0;
  double theta = 0.0;
  int support = 0;
  for (int j = 0; j < n; ++j) {
    cumsum += u[j];
    const double candidate = (cumsum - 1.0) / (j + 1);
    if (u[j] - candidate > 0.0) {
      support = j + 1;
      theta = candidate;
    }
  }
  (void)support;
  VectorXd p(n);
  for (int i = 0; i < n; ++i) p(i) = std::max(v(i) - theta, 0.0);
  return p;
}

MirrorStepResult mirror_step(Bregman kind, const VectorXd& pi_s,
                             const VectorXd& q_s, double eta) {
  if (pi_s.size() != q_s.size())
    throw std::invalid_argument("mirror_step: size mismatch");
  if (eta < 0.0) throw std::invalid_argument("mirror_step: eta must be >= 0");

  MirrorStepResult out;
  if (kind == Bregman::Euclidean) {
    // The projection is invariant to a constant shift of its input, so
    // step with eta (q - min q) instead of eta q: for very large eta this
    // keeps the surviving coordinates at O(1) magnitude, where a raw
    // pi - eta q would push every coordinate to ~eta and the threshold
    // arithmetic would lose the +-1 that decides the support.
    out.probs = project_simplex(
        pi_s - eta * (q_s.array() - q_s.minCoeff()).matrix());
    return out;
  }

  if (pi_s.minCoeff() <= 0.0)
    throw std::invalid_argument(
        "mirror_step: KL update requires an interior policy row");
  VectorXd logp = pi_s.array().log().matrix() - eta * q_s;
  const double m = logp.maxCoeff();
  const double lse = m + std::log((logp.array() - m).exp().sum());
  out.probs = (logp.array() - lse).exp().matrix();
  // Keep the iterate strictly interior: floor underflowed entries at the
  // smallest positive normal and renormalize, counting each floor.
  const double floor = std::numeric_limits<double>::min();
  for (int a = 0; a < out.probs.size(); ++a) {
    if (out.probs(a) < floor) {
      out.probs(a) = floor;
      ++out.floor_events;
    }
  }
  out.probs /= out.probs.sum();
  return out;
}

double bregman_divergence(Bregman kind, const VectorXd& p,
                          const VectorXd& p_prime) {
  if (p.size() != p_prime.size())
    throw std::invalid_argument("bregman_divergence: size mismatch");
  if (kind == Bregman::Euclidean) return 0.5 * (p - p_prime).squaredNorm();

  double d = 0.0;
  for (int a = 0; a < p.size(); ++a) {
    if (p(a) == 0.0) continue;  // 0 log 0 = 0
    if (p_prime(a) == 0.0) return std::numeric_limits<double>::infinity();
    d += p(a) * std::log(p(a) / p_prime(a));
  }
  return std::max(d, 0.0);
}

double weighted_divergence(Bregman kind, const Policy& pi,
                           const Policy& pi_prime, const VectorXd& w) {
  if (pi.num_states() != pi_prime.num_states() ||
      pi.num_states() != w.size())
    throw std::invalid_argument("weighted_divergence: size mismatch");
  double total = 0.0;
  for (int s = 0; s < pi.num_states(); ++s) {
    if (w(s) == 0.0) continue;
    total += w(s) * bregman_divergence(kind, pi.probs.row(s).transpose(),
                                       pi_prime.probs.row(s).transpose());
  }
  return total;
}

}  // namespace mdpopt
