// Command-line front door: generate instances, solve them exactly, run
// the optimizers with per-iteration bound checks, fit empirical rates,
// print sampling plans, and execute the verification suite.
//
// Exit codes: 0 success, 2 configuration error, 3 bound violation
// (or rate-fit assertion failure), 4 verification failure.

#include <CLI11.hpp>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <map>
#include <sstream>

#include "mdpopt/instances.hpp"
#include "mdpopt/mdp_core.hpp"
#include "mdpopt/optimizers.hpp"
#include "mdpopt/sampling.hpp"
#include "mdpopt/solvers.hpp"
#include "mdpopt/trace.hpp"
#include "mdpopt/verify.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitBoundViolation = 3;
constexpr int kExitVerifyFailure = 4;

using namespace mdpopt;

VectorXd pick_distribution(const std::string& choice, const InstanceFile& inst,
                           const std::optional<VectorXd>& file_dist,
                           const Dmdp& mdp, const char* what) {
  if (choice == "uniform") return uniform_distribution(mdp.num_states);
  if (choice == "from-file") {
    if (!file_dist)
      throw std::invalid_argument(std::string(what) +
                                  "=from-file but the instance file has none");
    validate_distribution(*file_dist);
    return *file_dist;
  }
  if (choice == "rho-star") {
    const auto pi_result = policy_iteration(mdp);
    return stationary_distribution(mdp, pi_result.pi_star);
  }
  (void)inst;
  throw std::invalid_argument(std::string(what) +
                              " must be uniform|from-file|rho-star");
}

int cmd_generate(const InstanceSpec& spec, const std::string& out) {
  InstanceFile inst;
  inst.mdp = generate(spec);
  save_instance(out, inst);
  std::cout << "wrote " << out << " (S=" << inst.mdp.num_states
            << ", A=" << inst.mdp.num_actions << ", gamma=" << inst.mdp.gamma
            << ")\n";
  return kExitOk;
}

int cmd_solve(const std::string& path, const std::string& rho_choice) {
  const InstanceFile inst = load_instance(path);
  const auto violations = validate_instance(inst);
  if (!violations.empty()) {
    for (const auto& v : violations) std::cerr << "invalid instance: " << v << "\n";
    return kExitConfig;
  }
  const VectorXd rho =
      pick_distribution(rho_choice, inst, inst.rho, inst.mdp, "--rho");
  const auto ref = optimal_reference(inst.mdp, rho);

  nlohmann::json doc;
  doc["v_star"] = std::vector<double>(ref.v_star.data(),
                                      ref.v_star.data() + ref.v_star.size());
  doc["pi_star_actions"] = ref.pi_star.greedy_support();
  doc["d_rho_star"] = std::vector<double>(
      ref.d_rho_star.data(), ref.d_rho_star.data() + ref.d_rho_star.size());
  doc["c_star_rho"] = std::isfinite(ref.c_star_rho)
                          ? nlohmann::json(ref.c_star_rho)
                          : nlohmann::json("inf");
  doc["theta_rho"] = std::isfinite(ref.theta_rho)
                         ? nlohmann::json(ref.theta_rho)
                         : nlohmann::json("inf");
  doc["v_rho_star"] = rho.dot(ref.v_star);
  std::cout << doc.dump(2) << "\n";
  return kExitOk;
}

struct RunArgs {
  std::string instance;
  std::string algorithm = "pmd";
  std::string geometry = "kl";
  std::string schedule = "geometric";
  double eta = 0.0;
  double ratio = 0.0;
  int steps = 100;
  std::string rho = "uniform";
  std::string mu = "uniform";
  std::string oracle = "exact";
  double tau = 0.01;
  double eps = 0.1;
  double delta = 0.05;
  std::uint64_t seed = 0;
  int threads = 1;
  std::string out_dir = ".";
};

int cmd_run(const RunArgs& args) {
  const InstanceFile inst = load_instance(args.instance);
  const auto violations = validate_instance(inst);
  if (!violations.empty()) {
    for (const auto& v : violations) std::cerr << "invalid instance: " << v << "\n";
    return kExitConfig;
  }
  const Dmdp& mdp = inst.mdp;
  const VectorXd rho = pick_distribution(args.rho, inst, inst.rho, mdp, "--rho");
  const auto ref = optimal_reference(mdp, rho);

  RunTrace trace;
  std::map<std::string, std::string> config = {
      {"instance", args.instance}, {"algorithm", args.algorithm},
      {"steps", std::to_string(args.steps)}, {"rho", args.rho},
      {"seed", std::to_string(args.seed)},
  };

  if (args.algorithm == "ppg") {
    const VectorXd mu = pick_distribution(args.mu, inst, inst.mu, mdp, "--mu");
    PpgOptions po;
    po.steps = args.steps;
    po.eta = args.eta;
    config["mu"] = args.mu;
    trace = ppg_run(mdp, mu, rho, po, &ref);
  } else if (args.algorithm == "pmd" || args.algorithm == "inexact-pmd") {
    PmdOptions po;
    po.steps = args.steps;
    if (args.geometry == "euclidean")
      po.kind = Bregman::Euclidean;
    else if (args.geometry == "kl")
      po.kind = Bregman::Kl;
    else
      throw std::invalid_argument("--geometry must be euclidean|kl");
    if (args.schedule == "constant")
      po.schedule = StepSchedule::constant(args.eta > 0.0 ? args.eta : 1.0);
    else if (args.schedule == "geometric")
      po.schedule = StepSchedule::geometric(args.eta, args.ratio);
    else if (args.schedule == "theta-ratio")
      po.schedule = StepSchedule::theta_ratio(args.eta > 0.0 ? args.eta : 1.0);
    else
      throw std::invalid_argument(
          "--schedule must be constant|geometric|theta-ratio");
    config["geometry"] = args.geometry;
    config["schedule"] = args.schedule;

    QOracle oracle;
    if (args.algorithm == "pmd" || args.oracle == "exact") {
      oracle = QOracle::exact();
    } else if (args.oracle == "noise") {
      oracle = QOracle::injected_noise(args.tau, args.seed);
      config["tau"] = std::to_string(args.tau);
    } else if (args.oracle == "rollout") {
      const auto plan =
          plan_sampling(mdp.gamma, ref.theta_rho, args.eps, args.delta,
                        static_cast<long>(mdp.num_states) * mdp.num_actions);
      oracle = QOracle::rollout(plan, args.seed);
      config["plan_K"] = std::to_string(plan.outer_iters_K);
      config["plan_H"] = std::to_string(plan.horizon_H);
      config["plan_M"] = std::to_string(plan.batch_M);
    } else {
      throw std::invalid_argument("--oracle must be exact|noise|rollout");
    }
    trace = inexact_pmd_run(mdp, rho, po, oracle, &ref, args.threads);
  } else {
    throw std::invalid_argument("--algorithm must be ppg|pmd|inexact-pmd");
  }

  std::filesystem::create_directories(args.out_dir);
  const auto trace_path =
      (std::filesystem::path(args.out_dir) / "trace.csv").string();
  const auto summary_path =
      (std::filesystem::path(args.out_dir) / "summary.json").string();
  write_trace_csv(trace_path, trace);
  write_run_summary(summary_path, trace, &ref, config);
  std::cout << "wrote " << trace_path << " and " << summary_path << "\n";

  if (!trace.ok()) {
    for (const auto& v : trace.violations)
      std::cerr << "bound violation: " << v.check << " at k=" << v.k
                << " (measured " << v.measured << ", bound " << v.bound
                << ")\n";
    return kExitBoundViolation;
  }
  return kExitOk;
}

RunTrace load_trace_deltas(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");
  std::string header;
  if (!std::getline(in, header))
    throw std::runtime_error("empty trace file '" + path + "'");
  std::vector<std::string> cols;
  {
    std::stringstream ss(header);
    std::string c;
    while (std::getline(ss, c, ',')) cols.push_back(c);
  }
  int k_idx = -1, delta_idx = -1;
  for (std::size_t i = 0; i < cols.size(); ++i) {
    if (cols[i] == "k") k_idx = static_cast<int>(i);
    if (cols[i] == "delta_k") delta_idx = static_cast<int>(i);
  }
  if (k_idx < 0 || delta_idx < 0)
    throw std::runtime_error("trace file lacks k/delta_k columns");
  RunTrace trace;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::stringstream ss(line);
    std::string f;
    while (std::getline(ss, f, ',')) fields.push_back(f);
    while (fields.size() < cols.size()) fields.push_back("");
    IterationRecord rec;
    rec.k = std::stoi(fields[k_idx]);
    if (!fields[delta_idx].empty()) rec.delta_k = std::stod(fields[delta_idx]);
    trace.records.push_back(rec);
  }
  return trace;
}

int cmd_rate_fit(const std::string& trace_path, double theta_rho, int burn_in,
                 bool geometric) {
  const RunTrace trace = load_trace_deltas(trace_path);
  const RateFit fit = rate_fit(trace, theta_rho, burn_in, geometric);
  nlohmann::json doc;
  doc["fitted_contraction"] = fit.fitted_contraction;
  doc["theoretical_contraction"] = fit.theoretical_contraction;
  doc["burn_in"] = fit.burn_in;
  doc["window"] = {fit.first_k, fit.last_k};
  doc["points"] = fit.points;
  doc["assertion_checked"] = fit.assertion_checked;
  doc["assertion_passed"] = fit.assertion_passed;
  std::cout << doc.dump(2) << "\n";
  return fit.assertion_checked && !fit.assertion_passed ? kExitBoundViolation
                                                        : kExitOk;
}

int cmd_verify(const std::string& scope, std::uint64_t seed,
               const std::string& out_dir) {
  VerifyOptions opts;
  if (scope == "full")
    opts.full = true;
  else if (scope != "quick")
    throw std::invalid_argument("--scope must be quick|full");
  opts.seed = seed;
  std::filesystem::create_directories(out_dir);
  opts.counterexample_path =
      (std::filesystem::path(out_dir) / "counterexample.txt").string();
  const VerifyReport report = verify_suite(opts);
  for (const auto& c : report.checks)
    std::cout << (c.passed ? "PASS" : "FAIL") << "  " << c.name
              << (c.passed ? "" : "  -- " + c.detail) << "\n";
  if (!report.ok()) {
    std::cerr << "verification failed; first counterexample written to "
              << opts.counterexample_path << "\n";
    return kExitVerifyFailure;
  }
  return kExitOk;
}

int cmd_plan(double gamma, double theta_rho, double eps, double delta,
             long num_sa) {
  const SamplingPlan plan = plan_sampling(gamma, theta_rho, eps, delta, num_sa);
  nlohmann::json doc;
  doc["outer_iters_K"] = plan.outer_iters_K;
  doc["horizon_H"] = plan.horizon_H;
  doc["batch_M"] = plan.batch_M;
  doc["target_eps"] = plan.target_eps;
  doc["confidence_delta"] = plan.confidence_delta;
  doc["bound_at_plan"] =
      bound_sampled(plan.outer_iters_K, plan.horizon_H, theta_rho, gamma);
  std::cout << doc.dump(2) << "\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Tabular discounted-MDP policy-optimization laboratory"};
  app.require_subcommand(1);

  // generate
  auto* gen = app.add_subcommand("generate", "Generate a benchmark instance");
  std::string gen_kind = "random", gen_out = "instance.json";
  InstanceSpec spec;
  gen->add_option("--kind", gen_kind, "random|chain|gridworld");
  gen->add_option("--num-states", spec.num_states);
  gen->add_option("--num-actions", spec.num_actions);
  gen->add_option("--alpha", spec.dirichlet_alpha);
  gen->add_option("--length", spec.length);
  gen->add_option("--width", spec.width);
  gen->add_option("--height", spec.height);
  gen->add_option("--slip-prob", spec.slip_prob);
  gen->add_option("--gamma", spec.gamma);
  gen->add_option("--seed", spec.seed);
  gen->add_option("--out", gen_out);

  // solve
  auto* solve = app.add_subcommand("solve", "Solve an instance exactly");
  std::string solve_instance, solve_rho = "uniform";
  solve->add_option("--instance", solve_instance)->required();
  solve->add_option("--rho", solve_rho, "uniform|from-file|rho-star");

  // run
  auto* run = app.add_subcommand("run", "Run an optimizer and write traces");
  RunArgs ra;
  run->add_option("--instance", ra.instance)->required();
  run->add_option("--algorithm", ra.algorithm, "ppg|pmd|inexact-pmd");
  run->add_option("--geometry", ra.geometry, "euclidean|kl");
  run->add_option("--schedule", ra.schedule, "constant|geometric|theta-ratio");
  run->add_option("--eta", ra.eta, "step size (eta_0 for increasing rules)");
  run->add_option("--ratio", ra.ratio, "geometric growth factor");
  run->add_option("--steps", ra.steps);
  run->add_option("--rho", ra.rho, "uniform|from-file|rho-star");
  run->add_option("--mu", ra.mu, "uniform|from-file (ppg only)");
  run->add_option("--oracle", ra.oracle, "exact|noise|rollout");
  run->add_option("--tau", ra.tau);
  run->add_option("--eps", ra.eps);
  run->add_option("--delta", ra.delta);
  run->add_option("--seed", ra.seed);
  run->add_option("--threads", ra.threads);
  run->add_option("--out-dir", ra.out_dir);

  // rate-fit
  auto* rf = app.add_subcommand("rate-fit", "Fit log delta_k against k");
  std::string rf_trace;
  double rf_theta = 0.0;
  int rf_burn_in = 0;
  bool rf_geometric = false;
  rf->add_option("--trace", rf_trace)->required();
  rf->add_option("--theta-rho", rf_theta)->required();
  rf->add_option("--burn-in", rf_burn_in);
  rf->add_flag("--geometric", rf_geometric,
               "assert fitted <= 1 - 1/theta_rho + 0.05");

  // verify
  auto* ver = app.add_subcommand("verify", "Run the invariant battery");
  std::string ver_scope = "quick", ver_out = ".";
  std::uint64_t ver_seed = 0;
  ver->add_option("--scope", ver_scope, "quick|full");
  ver->add_option("--seed", ver_seed);
  ver->add_option("--out-dir", ver_out);

  // plan
  auto* plan = app.add_subcommand("plan", "Print a sampling plan");
  double plan_gamma = 0.9, plan_theta = 10.0, plan_eps = 0.1,
         plan_delta = 0.05;
  long plan_num_sa = 1;
  plan->add_option("--gamma", plan_gamma)->required();
  plan->add_option("--theta-rho", plan_theta)->required();
  plan->add_option("--eps", plan_eps)->required();
  plan->add_option("--delta", plan_delta)->required();
  plan->add_option("--num-sa", plan_num_sa)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (gen->parsed()) {
      if (gen_kind == "random")
        spec.kind = InstanceSpec::Kind::Random;
      else if (gen_kind == "chain")
        spec.kind = InstanceSpec::Kind::Chain;
      else if (gen_kind == "gridworld")
        spec.kind = InstanceSpec::Kind::Gridworld;
      else
        throw std::invalid_argument("--kind must be random|chain|gridworld");
      return cmd_generate(spec, gen_out);
    }
    if (solve->parsed()) return cmd_solve(solve_instance, solve_rho);
    if (run->parsed()) return cmd_run(ra);
    if (rf->parsed())
      return cmd_rate_fit(rf_trace, rf_theta, rf_burn_in, rf_geometric);
    if (ver->parsed()) return cmd_verify(ver_scope, ver_seed, ver_out);
    if (plan->parsed())
      return cmd_plan(plan_gamma, plan_theta, plan_eps, plan_delta,
                      plan_num_sa);
  } catch (const std::invalid_argument& e) {
    std::cerr << "configuration error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  }
  return kExitConfig;
}
