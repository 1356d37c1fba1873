#include "mdpopt/instances.hpp"

#include <fstream>
#include <json.hpp>
#include <stdexcept>

#include "mdpopt/rng.hpp"

namespace mdpopt {

namespace {

using nlohmann::json;

constexpr std::uint64_t kTransStream = 0x7472616E73ull;
constexpr std::uint64_t kRewardStream = 0x726577617264ull;

void require(bool ok, const std::string& msg) {
  if (!ok) throw std::invalid_argument(msg);
}

Dmdp generate_random(const InstanceSpec& spec) {
  require(spec.num_states >= 1 && spec.num_actions >= 1,
          "random instance dimensions must be >= 1");
  require(spec.dirichlet_alpha > 0.0, "dirichlet_alpha must be > 0");
  Dmdp mdp;
  mdp.num_states = spec.num_states;
  mdp.num_actions = spec.num_actions;
  mdp.gamma = spec.gamma;
  mdp.transition.resize(spec.num_states * spec.num_actions, spec.num_states);
  mdp.reward.resize(spec.num_states, spec.num_actions);
  for (int s = 0; s < spec.num_states; ++s) {
    for (int a = 0; a < spec.num_actions; ++a) {
      const auto sa = static_cast<std::uint64_t>(mdp.sa_row(s, a));
      CounterRng trng(spec.seed, kTransStream, sa);
      double sum = 0.0;
      for (int sp = 0; sp < spec.num_states; ++sp) {
        const double g = trng.gamma(spec.dirichlet_alpha);
        mdp.transition(mdp.sa_row(s, a), sp) = g;
        sum += g;
      }
      mdp.transition.row(mdp.sa_row(s, a)) /= sum;
      CounterRng rrng(spec.seed, kRewardStream, sa);
      mdp.reward(s, a) = rrng.uniform();
    }
  }
  mdp.validate();
  return mdp;
}

// Birth-death line: action 0 moves left, action 1 moves right, attempted
// moves off either end leave the state unchanged. Per-step regret is 1
// everywhere except the rightmost state.
Dmdp generate_chain(const InstanceSpec& spec) {
  const int n = spec.length;
  require(n >= 1, "chain length must be >= 1");
  Dmdp mdp;
  mdp.num_states = n;
  mdp.num_actions = 2;
  mdp.gamma = spec.gamma;
  mdp.transition = MatrixXd::Zero(2 * n, n);
  mdp.reward.resize(n, 2);
  for (int s = 0; s < n; ++s) {
    mdp.transition(mdp.sa_row(s, 0), std::max(s - 1, 0)) = 1.0;
    mdp.transition(mdp.sa_row(s, 1), std::min(s + 1, n - 1)) = 1.0;
    const double regret = s == n - 1 ? 0.0 : 1.0;
    mdp.reward(s, 0) = regret;
    mdp.reward(s, 1) = regret;
  }
  mdp.validate();
  return mdp;
}

// Grid with actions {up, down, left, right}; with probability slip_prob
// the move slips to one of the two lateral directions (slip_prob/2
// each). Walls reflect (the state is unchanged). The last cell is an
// absorbing goal with regret 0; regret is 1 elsewhere.
Dmdp generate_gridworld(const InstanceSpec& spec) {
  const int w = spec.width, h = spec.height;
  require(w >= 1 && h >= 1, "gridworld dimensions must be >= 1");
  require(spec.slip_prob >= 0.0 && spec.slip_prob < 1.0,
          "slip_prob must be in [0,1)");
  const int n = w * h;
  Dmdp mdp;
  mdp.num_states = n;
  mdp.num_actions = 4;
  mdp.gamma = spec.gamma;
  mdp.transition = MatrixXd::Zero(4 * n, n);
  mdp.reward.resize(n, 4);
  const int goal = n - 1;
  // Displacements for up, down, left, right on (x, y) with y increasing
  // downward; lateral slips are the two directions orthogonal to the move.
  const int dx[4] = {0, 0, -1, 1};
  const int dy[4] = {-1, 1, 0, 0};
  const int lateral[4][2] = {{2, 3}, {2, 3}, {0, 1}, {0, 1}};
  auto target = [&](int s, int dir) {
    const int x = s % w, y = s / w;
    const int nx = x + dx[dir], ny = y + dy[dir];
    if (nx < 0 || nx >= w || ny < 0 || ny >= h) return s;
    return ny * w + nx;
  };
  for (int s = 0; s < n; ++s) {
    for (int a = 0; a < 4; ++a) {
      const int row = mdp.sa_row(s, a);
      if (s == goal) {
        mdp.transition(row, goal) = 1.0;
        mdp.reward(s, a) = 0.0;
        continue;
      }
      mdp.transition(row, target(s, a)) += 1.0 - spec.slip_prob;
      mdp.transition(row, target(s, lateral[a][0])) += spec.slip_prob / 2.0;
      mdp.transition(row, target(s, lateral[a][1])) += spec.slip_prob / 2.0;
      mdp.reward(s, a) = 1.0;
    }
  }
  mdp.validate();
  return mdp;
}

json matrix_to_json(const MatrixXd& m) {
  json rows = json::array();
  for (int r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (int c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

VectorXd vector_from_json(const json& arr, const std::string& field) {
  if (!arr.is_array())
    throw std::runtime_error("field '" + field + "' must be an array");
  VectorXd v(arr.size());
  for (std::size_t i = 0; i < arr.size(); ++i) v(i) = arr[i].get<double>();
  return v;
}

}  // namespace

InstanceSpec InstanceSpec::random(int num_states, int num_actions,
                                  double alpha, double gamma,
                                  std::uint64_t seed) {
  InstanceSpec s;
  s.kind = Kind::Random;
  s.num_states = num_states;
  s.num_actions = num_actions;
  s.dirichlet_alpha = alpha;
  s.gamma = gamma;
  s.seed = seed;
  return s;
}

InstanceSpec InstanceSpec::chain(int length, double gamma) {
  InstanceSpec s;
  s.kind = Kind::Chain;
  s.length = length;
  s.gamma = gamma;
  return s;
}

InstanceSpec InstanceSpec::gridworld(int width, int height, double slip_prob,
                                     double gamma, std::uint64_t seed) {
  InstanceSpec s;
  s.kind = Kind::Gridworld;
  s.width = width;
  s.height = height;
  s.slip_prob = slip_prob;
  s.gamma = gamma;
  s.seed = seed;
  return s;
}

Dmdp generate(const InstanceSpec& spec) {
  require(spec.gamma >= 0.0 && spec.gamma < 1.0, "gamma must be in [0,1)");
  switch (spec.kind) {
    case InstanceSpec::Kind::Random:
      return generate_random(spec);
    case InstanceSpec::Kind::Chain:
      return generate_chain(spec);
    case InstanceSpec::Kind::Gridworld:
      return generate_gridworld(spec);
  }
  throw std::logic_error("unreachable instance kind");
}

void save_instance(const std::string& path, const InstanceFile& inst) {
  json doc;
  doc["format_version"] = 1;
  doc["num_states"] = inst.mdp.num_states;
  doc["num_actions"] = inst.mdp.num_actions;
  doc["gamma"] = inst.mdp.gamma;
  doc["convention"] = "regret";
  json trans = json::array();
  for (int s = 0; s < inst.mdp.num_states; ++s) {
    json per_action = json::array();
    for (int a = 0; a < inst.mdp.num_actions; ++a) {
      json row = json::array();
      for (int sp = 0; sp < inst.mdp.num_states; ++sp)
        row.push_back(inst.mdp.transition(inst.mdp.sa_row(s, a), sp));
      per_action.push_back(std::move(row));
    }
    trans.push_back(std::move(per_action));
  }
  doc["transition"] = std::move(trans);
  doc["reward"] = matrix_to_json(inst.mdp.reward);
  if (inst.rho) doc["rho"] = matrix_to_json(inst.rho->transpose())[0];
  if (inst.mu) doc["mu"] = matrix_to_json(inst.mu->transpose())[0];

  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
  out << doc.dump(2) << "\n";
  if (!out) throw std::runtime_error("failed writing '" + path + "'");
}

InstanceFile load_instance(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw std::runtime_error("parse error in '" + path + "': " + e.what());
  }

  auto fetch = [&](const char* field) -> const json& {
    if (!doc.contains(field))
      throw std::runtime_error("missing field '" + std::string(field) + "'");
    return doc[field];
  };
  if (fetch("format_version").get<int>() != 1)
    throw std::runtime_error("unsupported format_version");

  InstanceFile inst;
  inst.mdp.num_states = fetch("num_states").get<int>();
  inst.mdp.num_actions = fetch("num_actions").get<int>();
  inst.mdp.gamma = fetch("gamma").get<double>();
  const std::string convention = fetch("convention").get<std::string>();
  if (convention != "regret" && convention != "reward")
    throw std::runtime_error("convention must be 'regret' or 'reward'");
  const int ns = inst.mdp.num_states, na = inst.mdp.num_actions;
  if (ns < 1 || na < 1) throw std::runtime_error("dimensions must be >= 1");

  const json& trans = fetch("transition");
  if (static_cast<int>(trans.size()) != ns)
    throw std::runtime_error("transition must have num_states entries");
  inst.mdp.transition.resize(ns * na, ns);
  for (int s = 0; s < ns; ++s) {
    if (static_cast<int>(trans[s].size()) != na)
      throw std::runtime_error("transition[" + std::to_string(s) +
                               "] must have num_actions rows");
    for (int a = 0; a < na; ++a) {
      const json& row = trans[s][a];
      if (static_cast<int>(row.size()) != ns)
        throw std::runtime_error("transition[" + std::to_string(s) + "][" +
                                 std::to_string(a) +
                                 "] must have num_states entries");
      for (int sp = 0; sp < ns; ++sp)
        inst.mdp.transition(inst.mdp.sa_row(s, a), sp) = row[sp].get<double>();
    }
  }

  const json& reward = fetch("reward");
  if (static_cast<int>(reward.size()) != ns)
    throw std::runtime_error("reward must have num_states rows");
  inst.mdp.reward.resize(ns, na);
  for (int s = 0; s < ns; ++s) {
    if (static_cast<int>(reward[s].size()) != na)
      throw std::runtime_error("reward[" + std::to_string(s) +
                               "] must have num_actions entries");
    for (int a = 0; a < na; ++a) {
      double r = reward[s][a].get<double>();
      if (convention == "reward") r = 1.0 - r;
      inst.mdp.reward(s, a) = r;
    }
  }

  if (doc.contains("rho")) inst.rho = vector_from_json(doc["rho"], "rho");
  if (doc.contains("mu")) inst.mu = vector_from_json(doc["mu"], "mu");
  return inst;
}

std::vector<std::string> validate_instance(const InstanceFile& inst) {
  std::vector<std::string> violations = inst.mdp.check();
  auto check_dist = [&](const std::optional<VectorXd>& d, const char* name) {
    if (!d) return;
    if (d->size() != inst.mdp.num_states) {
      violations.push_back(std::string(name) + " has wrong length");
      return;
    }
    if (d->minCoeff() < 0.0)
      violations.push_back(std::string(name) + " has a negative entry");
    if (std::abs(d->sum() - 1.0) > Tol::dist_sum)
      violations.push_back(std::string(name) + " does not sum to 1 (sum=" +
                           std::to_string(d->sum()) + ")");
  };
  check_dist(inst.rho, "rho");
  check_dist(inst.mu, "mu");
  return violations;
}

}  // namespace mdpopt
