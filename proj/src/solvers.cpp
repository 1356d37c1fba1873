#include "mdpopt/solvers.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <limits>
#include <vector>

namespace mdpopt {

namespace {

std::vector<int> greedy_actions(const Dmdp& mdp, const VectorXd& v) {
  const MatrixXd q = q_from_value(mdp, v);
  std::vector<int> actions(mdp.num_states);
  for (int s = 0; s < mdp.num_states; ++s) {
    int best = 0;
    for (int a = 1; a < mdp.num_actions; ++a)
      if (q(s, a) < q(s, best)) best = a;  // strict: ties keep lowest index
    actions[s] = best;
  }
  return actions;
}

}  // namespace

PolicyIterationResult policy_iteration(const Dmdp& mdp, int max_iters) {
  mdp.validate();
  if (max_iters <= 0) max_iters = 10 * mdp.num_states * mdp.num_actions;

  std::vector<int> actions(mdp.num_states, 0);
  Policy pi = Policy::deterministic(actions, mdp.num_actions);
  VectorXd v = value_function(mdp, pi);
  for (int it = 1; it <= max_iters; ++it) {
    std::vector<int> next = greedy_actions(mdp, v);
    if (next == actions)
      return {pi, v, it};
    actions = std::move(next);
    pi = Policy::deterministic(actions, mdp.num_actions);
    v = value_function(mdp, pi);
  }
  throw std::runtime_error("policy_iteration failed to converge within " +
                           std::to_string(max_iters) + " iterations");
}

VectorXd value_iteration_oracle(const Dmdp& mdp, double tol) {
  mdp.validate();
  if (!(tol > 0.0))
    throw std::invalid_argument("value_iteration_oracle: tol must be > 0");
  VectorXd v = VectorXd::Zero(mdp.num_states);
  // ||v_k - V*||_inf <= gamma/(1-gamma) ||v_k - v_{k-1}||_inf.
  const double contraction = mdp.gamma / (1.0 - mdp.gamma);
  for (long it = 0; it < 100000000L; ++it) {
    const MatrixXd q = q_from_value(mdp, v);
    const VectorXd next = q.rowwise().minCoeff();
    const double diff = (next - v).lpNorm<Eigen::Infinity>();
    v = next;
    if (contraction * diff <= tol) return v;
  }
  throw std::runtime_error("value_iteration_oracle did not converge");
}

VectorXd stationary_distribution(const Dmdp& mdp, const Policy& pi) {
  const MatrixXd p = induced_dynamics(mdp, pi).chain;
  const int n = mdp.num_states;
  // Solve d^T (P - I) = 0 with the normalization row appended; a unique
  // stationary distribution exists iff the augmented system has rank n.
  MatrixXd sys(n + 1, n);
  sys.topRows(n) = (p - MatrixXd::Identity(n, n)).transpose();
  sys.bottomRows(1).setOnes();
  Eigen::ColPivHouseholderQR<MatrixXd> qr(sys);
  qr.setThreshold(1e-10);
  if (qr.rank() < n)
    throw NonUniqueStationaryDistribution(
        "induced chain has multiple recurrent classes; stationary "
        "distribution is not unique");
  VectorXd b = VectorXd::Zero(n + 1);
  b(n) = 1.0;
  VectorXd d = qr.solve(b);
  d = d.cwiseMax(0.0);
  d /= d.sum();
  return d;
}

OptimalReference optimal_reference(const Dmdp& mdp, const VectorXd& rho) {
  validate_distribution(rho);
  auto pi_result = policy_iteration(mdp);
  OptimalReference ref;
  ref.pi_star = std::move(pi_result.pi_star);
  ref.v_star = std::move(pi_result.v_star);
  ref.d_rho_star = visitation(mdp, ref.pi_star, rho);
  ref.c_star_rho = mismatch_coefficient(ref.d_rho_star, rho);
  ref.theta_rho = ref.c_star_rho / (1.0 - mdp.gamma);
  ref.rho = rho;
  return ref;
}

}  // namespace mdpopt
