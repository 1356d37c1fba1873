#pragma once

#include <utility>

#include "mdpopt/types.hpp"

namespace mdpopt {

// Policy-induced state chain P(pi) (row-stochastic, S x S) and expected
// per-step regret r(pi) (length S).
struct InducedDynamics {
  MatrixXd chain;
  VectorXd regret;
};

InducedDynamics induced_dynamics(const Dmdp& mdp, const Policy& pi);

// Solves (I - gamma P(pi)) V = r(pi) by dense LU. Throws if the solve
// residual exceeds `residual_tol` (should never happen for gamma < 1).
VectorXd value_function(const Dmdp& mdp, const Policy& pi,
                        double residual_tol = Tol::value_residual);

double value_weighted(const Dmdp& mdp, const Policy& pi, const VectorXd& rho);

// rho^T (I - gamma P(table))^{-1} r(table) evaluated for an arbitrary
// real table (rows need not lie on the simplex). This is the analytic
// extension whose gradient the policy-gradient formula computes; finite
// difference checks evaluate it at off-simplex points.
double value_analytic_extension(const Dmdp& mdp, const MatrixXd& table,
                                const VectorXd& rho);

// Q(s,a) = R(s,a) + gamma sum_s' P(s'|s,a) V_s'.
MatrixXd q_from_value(const Dmdp& mdp, const VectorXd& v);
QTable q_function(const Dmdp& mdp, const Policy& pi);

// Discounted state-visitation distribution d_rho(pi) =
// (1-gamma) (I - gamma P(pi))^{-T} rho.
VectorXd visitation(const Dmdp& mdp, const Policy& pi, const VectorXd& rho);

// Gradient of the analytic extension of V_mu at pi:
// block s equals d_mu,s(pi) * Q_s(pi) / (1-gamma).
MatrixXd policy_gradient(const Dmdp& mdp, const Policy& pi,
                         const VectorXd& mu);

// max_s num_s / den_s with 0/0 = 1; +infinity when num_s > 0, den_s = 0.
double mismatch_coefficient(const VectorXd& num, const VectorXd& den);

// Both sides of the performance-difference identity
// V_rho(pi) - V_rho(pi_tilde), computed through independent code paths.
std::pair<double, double> performance_difference(const Dmdp& mdp,
                                                 const Policy& pi,
                                                 const Policy& pi_tilde,
                                                 const VectorXd& rho);

}  // namespace mdpopt
