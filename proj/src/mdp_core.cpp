#include "mdpopt/mdp_core.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace mdpopt {

namespace {

void require_shapes(const Dmdp& mdp, const Policy& pi) {
  if (pi.num_states() != mdp.num_states || pi.num_actions() != mdp.num_actions)
    throw std::invalid_argument("policy shape does not match MDP");
}

MatrixXd induced_chain_from_table(const Dmdp& mdp, const MatrixXd& table) {
  MatrixXd p = MatrixXd::Zero(mdp.num_states, mdp.num_states);
  for (int s = 0; s < mdp.num_states; ++s)
    for (int a = 0; a < mdp.num_actions; ++a)
      p.row(s) += table(s, a) * mdp.transition.row(mdp.sa_row(s, a));
  return p;
}

VectorXd induced_regret_from_table(const Dmdp& mdp, const MatrixXd& table) {
  VectorXd r(mdp.num_states);
  for (int s = 0; s < mdp.num_states; ++s)
    r(s) = table.row(s).dot(mdp.reward.row(s));
  return r;
}

}  // namespace

InducedDynamics induced_dynamics(const Dmdp& mdp, const Policy& pi) {
  require_shapes(mdp, pi);
  return {induced_chain_from_table(mdp, pi.probs),
          induced_regret_from_table(mdp, pi.probs)};
}

VectorXd value_function(const Dmdp& mdp, const Policy& pi,
                        double residual_tol) {
  const auto dyn = induced_dynamics(mdp, pi);
  const MatrixXd sys =
      MatrixXd::Identity(mdp.num_states, mdp.num_states) - mdp.gamma * dyn.chain;
  const VectorXd v = sys.partialPivLu().solve(dyn.regret);
  const double residual = (sys * v - dyn.regret).lpNorm<Eigen::Infinity>();
  if (residual > residual_tol)
    throw std::runtime_error("value solve residual " + std::to_string(residual) +
                             " exceeds tolerance");
  return v;
}

double value_weighted(const Dmdp& mdp, const Policy& pi, const VectorXd& rho) {
  return rho.dot(value_function(mdp, pi));
}

double value_analytic_extension(const Dmdp& mdp, const MatrixXd& table,
                                const VectorXd& rho) {
  const MatrixXd sys = MatrixXd::Identity(mdp.num_states, mdp.num_states) -
                       mdp.gamma * induced_chain_from_table(mdp, table);
  return rho.dot(sys.partialPivLu().solve(induced_regret_from_table(mdp, table)));
}

MatrixXd q_from_value(const Dmdp& mdp, const VectorXd& v) {
  MatrixXd q(mdp.num_states, mdp.num_actions);
  for (int s = 0; s < mdp.num_states; ++s)
    for (int a = 0; a < mdp.num_actions; ++a)
      q(s, a) = mdp.reward(s, a) +
                mdp.gamma * mdp.transition.row(mdp.sa_row(s, a)).dot(v);
  return q;
}

QTable q_function(const Dmdp& mdp, const Policy& pi) {
  return {q_from_value(mdp, value_function(mdp, pi)), false};
}

VectorXd visitation(const Dmdp& mdp, const Policy& pi, const VectorXd& rho) {
  const auto dyn = induced_dynamics(mdp, pi);
  const MatrixXd sys =
      (MatrixXd::Identity(mdp.num_states, mdp.num_states) - mdp.gamma * dyn.chain)
          .transpose();
  return (1.0 - mdp.gamma) * sys.partialPivLu().solve(rho).eval();
}

MatrixXd policy_gradient(const Dmdp& mdp, const Policy& pi,
                         const VectorXd& mu) {
  const VectorXd d = visitation(mdp, pi, mu);
  const MatrixXd q = q_function(mdp, pi).values;
  return (d / (1.0 - mdp.gamma)).asDiagonal() * q;
}

double mismatch_coefficient(const VectorXd& num, const VectorXd& den) {
  if (num.size() != den.size())
    throw std::invalid_argument("mismatch_coefficient: size mismatch");
  double best = -std::numeric_limits<double>::infinity();
  for (int s = 0; s < num.size(); ++s) {
    double ratio;
    if (den(s) == 0.0)
      ratio = num(s) == 0.0 ? 1.0  // convention: 0/0 = 1
                            : std::numeric_limits<double>::infinity();
    else
      ratio = num(s) / den(s);
    best = std::max(best, ratio);
  }
  return best;
}

std::pair<double, double> performance_difference(const Dmdp& mdp,
                                                 const Policy& pi,
                                                 const Policy& pi_tilde,
                                                 const VectorXd& rho) {
  const double lhs =
      value_weighted(mdp, pi, rho) - value_weighted(mdp, pi_tilde, rho);
  const VectorXd d = visitation(mdp, pi, rho);
  const MatrixXd q_tilde = q_function(mdp, pi_tilde).values;
  double rhs = 0.0;
  for (int s = 0; s < mdp.num_states; ++s)
    rhs += d(s) * q_tilde.row(s).dot(pi.probs.row(s) - pi_tilde.probs.row(s));
  rhs /= 1.0 - mdp.gamma;
  return {lhs, rhs};
}

}  // namespace mdpopt
