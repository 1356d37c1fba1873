#include <doctest.h>

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <iterator>
#include <string>
#include <vector>

#include "mdpopt/simplex.hpp"
#include "mdpopt/verify.hpp"

using namespace mdpopt;

TEST_CASE("quick verification battery passes on the stock primitives") {
  VerifyOptions opts;
  opts.seed = 2024;
  const auto t0 = std::chrono::steady_clock::now();
  const auto report = verify_suite(opts);
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();
  for (const auto& c : report.checks) {
    INFO(c.name << ": " << c.detail);
    CHECK(c.passed);
  }
  CHECK(report.ok());
  CHECK(secs < 60.0);
}

TEST_CASE("a sign-flipped KL mirror step is caught") {
  VerifyOptions opts;
  opts.seed = 2024;
  opts.counterexample_path = "/tmp/mdpopt_verify_mutant1.txt";
  // Ascent instead of descent: +eta q in the exponent.
  opts.mirror = [](Bregman kind, const VectorXd& pi, const VectorXd& q,
                   double eta) {
    return mirror_step(kind, pi, kind == Bregman::Kl ? VectorXd(-q) : q, eta);
  };
  const auto report = verify_suite(opts);
  CHECK(!report.ok());
  bool descent_failed = false;
  for (const auto& c : report.checks)
    if (c.name == "pmd_descent_property" && !c.passed) descent_failed = true;
  CHECK(descent_failed);
  // The counterexample file names the failing check and is non-empty.
  std::ifstream in(opts.counterexample_path);
  REQUIRE(in);
  std::string contents((std::istreambuf_iterator<char>(in)),
                       std::istreambuf_iterator<char>());
  CHECK(!contents.empty());
  std::remove(opts.counterexample_path.c_str());
}

TEST_CASE("an off-by-one projection threshold is caught") {
  VerifyOptions opts;
  opts.seed = 2024;
  // Classic bug: keep one coordinate too few when computing the simplex
  // threshold. Reproduced here as sort + wrong support size.
  opts.project = [](const VectorXd& v) {
    const int n = static_cast<int>(v.size());
    std::vector<double> u(v.data(), v.data() + n);
    std::sort(u.begin(), u.end(), std::greater<double>());
    double cssv = 0.0;
    int support = 1;
    for (int i = 0; i < n; ++i) {
      cssv += u[i];
      if (u[i] - (cssv - 1.0) / (i + 1) > 0.0) support = i;  // should be i + 1
      if (support == 0) support = 1;
    }
    double sum = 0.0;
    for (int i = 0; i < support; ++i) sum += u[i];
    const double theta = (sum - 1.0) / support;
    VectorXd out(n);
    for (int i = 0; i < n; ++i) out(i) = std::max(v(i) - theta, 0.0);
    return out;
  };
  const auto report = verify_suite(opts);
  bool projection_failed = false;
  for (const auto& c : report.checks)
    if (c.name == "project_simplex_kkt" && !c.passed) projection_failed = true;
  CHECK(projection_failed);
  CHECK(!report.ok());
}
