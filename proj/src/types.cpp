#include "mdpopt/types.hpp"

#include <cmath>
#include <stdexcept>

namespace mdpopt {

std::vector<std::string> Dmdp::check(double row_tol) const {
  std::vector<std::string> out;
  if (num_states < 1) out.push_back("num_states must be >= 1");
  if (num_actions < 1) out.push_back("num_actions must be >= 1");
  if (!(gamma >= 0.0 && gamma < 1.0))
    out.push_back("gamma must lie in [0,1), got " + std::to_string(gamma));
  if (transition.rows() != static_cast<long>(num_states) * num_actions ||
      transition.cols() != num_states) {
    out.push_back("transition has wrong shape");
    return out;
  }
  if (reward.rows() != num_states || reward.cols() != num_actions) {
    out.push_back("reward has wrong shape");
    return out;
  }
  for (int s = 0; s < num_states; ++s) {
    for (int a = 0; a < num_actions; ++a) {
      const auto row = transition.row(sa_row(s, a));
      if (row.minCoeff() < 0.0)
        out.push_back("negative transition probability at (s=" +
                      std::to_string(s) + ",a=" + std::to_string(a) + ")");
      if (std::abs(row.sum() - 1.0) > row_tol)
        out.push_back("transition row (s=" + std::to_string(s) + ",a=" +
                      std::to_string(a) + ") sums to " +
                      std::to_string(row.sum()));
      const double r = reward(s, a);
      if (!(r >= 0.0 && r <= 1.0))
        out.push_back("reward out of [0,1] at (s=" + std::to_string(s) +
                      ",a=" + std::to_string(a) + ")");
    }
  }
  return out;
}

void Dmdp::validate(double row_tol) const {
  auto v = check(row_tol);
  if (!v.empty()) throw std::invalid_argument("invalid Dmdp: " + v.front());
}

void Policy::validate(double row_tol) const {
  if (probs.rows() < 1 || probs.cols() < 1)
    throw std::invalid_argument("empty policy");
  for (int s = 0; s < num_states(); ++s) {
    if (probs.row(s).minCoeff() < 0.0)
      throw std::invalid_argument("negative policy entry at state " +
                                  std::to_string(s));
    if (std::abs(probs.row(s).sum() - 1.0) > row_tol)
      throw std::invalid_argument("policy row " + std::to_string(s) +
                                  " does not sum to 1");
  }
}

Policy Policy::uniform(int num_states, int num_actions) {
  Policy pi;
  pi.probs = MatrixXd::Constant(num_states, num_actions, 1.0 / num_actions);
  return pi;
}

Policy Policy::deterministic(const std::vector<int>& actions, int num_actions) {
  Policy pi;
  pi.probs = MatrixXd::Zero(static_cast<int>(actions.size()), num_actions);
  for (std::size_t s = 0; s < actions.size(); ++s)
    pi.probs(static_cast<int>(s), actions[s]) = 1.0;
  return pi;
}

std::vector<int> Policy::greedy_support() const {
  std::vector<int> out(num_states());
  for (int s = 0; s < num_states(); ++s) {
    int best = 0;
    for (int a = 1; a < num_actions(); ++a)
      if (probs(s, a) > probs(s, best)) best = a;
    out[s] = best;
  }
  return out;
}

void validate_distribution(const VectorXd& p, double sum_tol) {
  if (p.size() < 1) throw std::invalid_argument("empty distribution");
  if (p.minCoeff() < 0.0)
    throw std::invalid_argument("distribution has a negative entry");
  if (std::abs(p.sum() - 1.0) > sum_tol)
    throw std::invalid_argument("distribution sums to " +
                                std::to_string(p.sum()));
}

VectorXd uniform_distribution(int n) {
  return VectorXd::Constant(n, 1.0 / n);
}

VectorXd point_mass(int n, int s) {
  VectorXd p = VectorXd::Zero(n);
  p(s) = 1.0;
  return p;
}

}  // namespace mdpopt
