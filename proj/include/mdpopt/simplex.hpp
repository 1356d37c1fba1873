#pragma once

#include "mdpopt/types.hpp"

namespace mdpopt {

enum class Bregman { Euclidean, Kl };

// Euclidean projection onto the probability simplex (sort and threshold).
VectorXd project_simplex(const VectorXd& v);

struct MirrorStepResult {
  VectorXd probs;
  // Number of coordinates floored to the smallest positive normal after
  // underflow in the KL update (0 for the Euclidean step).
  int floor_events = 0;
};

// One per-state proximal step: argmin_p { eta <q, p> + D(p, pi_s) }.
// Euclidean: project(pi_s - eta q). KL: p_a proportional to
// pi_a exp(-eta q_a), computed in log space. KL requires pi_s > 0.
MirrorStepResult mirror_step(Bregman kind, const VectorXd& pi_s,
                             const VectorXd& q_s, double eta);

// Euclidean: (1/2)||p - p'||^2. KL: sum_a p_a log(p_a / p'_a) with
// 0 log 0 = 0; returns +infinity when p puts mass where p' has none.
double bregman_divergence(Bregman kind, const VectorXd& p,
                          const VectorXd& p_prime);

// sum_s w_s D(pi_s, pi'_s).
double weighted_divergence(Bregman kind, const Policy& pi,
                           const Policy& pi_prime, const VectorXd& w);

}  // namespace mdpopt
