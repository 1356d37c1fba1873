#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "mdpopt/types.hpp"

namespace mdpopt {

struct InstanceSpec {
  enum class Kind { Random, Chain, Gridworld };

  Kind kind = Kind::Random;
  // Random
  int num_states = 1;
  int num_actions = 1;
  double dirichlet_alpha = 1.0;
  // Chain
  int length = 1;
  // Gridworld
  int width = 1;
  int height = 1;
  double slip_prob = 0.0;

  double gamma = 0.9;
  std::uint64_t seed = 0;

  static InstanceSpec random(int num_states, int num_actions, double alpha,
                             double gamma, std::uint64_t seed);
  static InstanceSpec chain(int length, double gamma);
  static InstanceSpec gridworld(int width, int height, double slip_prob,
                                double gamma, std::uint64_t seed);
};

// Deterministic: the same spec always yields a bitwise-identical Dmdp.
Dmdp generate(const InstanceSpec& spec);

struct InstanceFile {
  Dmdp mdp;
  std::optional<VectorXd> rho;
  std::optional<VectorXd> mu;
};

// Canonical on-disk format: a JSON document with format_version, shapes,
// gamma, convention ("regret" stores R as-is, "reward" applies
// R <- 1 - R on load), dense transition[s][a][s'] and reward[s][a], plus
// optional rho / mu arrays. Numbers round-trip exactly.
void save_instance(const std::string& path, const InstanceFile& inst);
InstanceFile load_instance(const std::string& path);

// Semantic validation of loaded data (row sums, ranges, distribution
// sums); violations are reported, never auto-fixed.
std::vector<std::string> validate_instance(const InstanceFile& inst);

}  // namespace mdpopt
