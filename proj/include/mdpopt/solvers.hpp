#pragma once

#include <stdexcept>

#include "mdpopt/mdp_core.hpp"
#include "mdpopt/types.hpp"

namespace mdpopt {

struct PolicyIterationResult {
  Policy pi_star;      // deterministic, greedy-stable
  VectorXd v_star;
  int iterations = 0;
};

// Classical policy iteration with exact evaluation. Greedy improvement
// breaks argmin ties toward the lowest action index, so the returned
// policy is a deterministic function of the MDP alone.
PolicyIterationResult policy_iteration(const Dmdp& mdp, int max_iters = 0);

// Bellman fixed-point iteration, stops once the iterate is within `tol`
// of V* (via the standard gamma-contraction stopping rule). Independent
// of policy_iteration; used as an oracle against it.
VectorXd value_iteration_oracle(const Dmdp& mdp, double tol);

struct NonUniqueStationaryDistribution : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Stationary distribution of the chain induced by pi. Throws
// NonUniqueStationaryDistribution when the chain has more than one
// recurrent class.
VectorXd stationary_distribution(const Dmdp& mdp, const Policy& pi);

// Optimality-referenced quantities consumed by every bound check.
struct OptimalReference {
  Policy pi_star;
  VectorXd v_star;
  VectorXd d_rho_star;   // d_rho(pi*)
  double c_star_rho = 0; // ||d_rho(pi*)/rho||_inf, may be +inf
  double theta_rho = 0;  // c_star_rho / (1-gamma)
  VectorXd rho;
  double delta0_of(double v_rho) const { return v_rho - rho.dot(v_star); }
};

OptimalReference optimal_reference(const Dmdp& mdp, const VectorXd& rho);

}  // namespace mdpopt
