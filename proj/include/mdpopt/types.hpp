#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

namespace mdpopt {

using Eigen::MatrixXd;
using Eigen::VectorXd;

// Default numeric tolerances, chosen at ~100x machine epsilon scale for
// state spaces up to a few hundred states. Callers may override per call.
struct Tol {
  static constexpr double row_sum = 1e-9;
  static constexpr double simplex_row = 1e-12;
  static constexpr double dist_sum = 1e-10;
  static constexpr double value_residual = 1e-10;
  static constexpr double value_range = 1e-9;
  static constexpr double inner_product = 1e-10;
  static constexpr double identity = 1e-9;
  static constexpr double descent = 1e-12;
  static constexpr double bound_slack = 1e-9;
};

// Finite discounted MDP in the regret convention: rewards are per-step
// regret in [0,1] and the objective is minimized.
struct Dmdp {
  int num_states = 0;
  int num_actions = 0;
  // Row s * num_actions + a holds the transition distribution P(.|s,a).
  MatrixXd transition;
  // reward(s, a) in [0, 1].
  MatrixXd reward;
  double gamma = 0.0;

  int sa_row(int s, int a) const { return s * num_actions + a; }

  // List of invariant violations; empty means valid.
  std::vector<std::string> check(double row_tol = Tol::row_sum) const;

  // Throws std::invalid_argument on the first violation.
  void validate(double row_tol = Tol::row_sum) const;
};

// Row-stochastic decision table, one simplex row per state.
struct Policy {
  MatrixXd probs;

  int num_states() const { return static_cast<int>(probs.rows()); }
  int num_actions() const { return static_cast<int>(probs.cols()); }
  bool interior() const { return probs.size() > 0 && probs.minCoeff() > 0.0; }

  void validate(double row_tol = Tol::simplex_row) const;

  static Policy uniform(int num_states, int num_actions);
  // Point mass on actions[s] in each row.
  static Policy deterministic(const std::vector<int>& actions, int num_actions);
  // Greedy support per row: the argmax action (lowest index on ties).
  std::vector<int> greedy_support() const;
};

struct QTable {
  MatrixXd values;  // (s, a)
  bool estimated = false;
};

// Distributions over states are plain vectors; these helpers enforce the
// simplex invariants where a function contract requires them.
void validate_distribution(const VectorXd& p, double sum_tol = Tol::dist_sum);
VectorXd uniform_distribution(int n);
VectorXd point_mass(int n, int s);

}  // namespace mdpopt
