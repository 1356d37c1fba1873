#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "mdpopt/simplex.hpp"
#include "mdpopt/types.hpp"

namespace mdpopt {

using ProjectFn = std::function<VectorXd(const VectorXd&)>;
using MirrorFn = std::function<MirrorStepResult(Bregman, const VectorXd&,
                                                const VectorXd&, double)>;

struct VerifyOptions {
  bool full = false;  // quick: 10 instances |S|<=6,|A|<=3; full: 100
                      // instances |S|<=12,|A|<=5 plus sampling trials
  std::uint64_t seed = 0;
  // First counterexample is serialized here when non-empty.
  std::string counterexample_path;
  // Overridable primitives so deliberate mutations can be exercised by
  // tests; defaults are the library implementations.
  ProjectFn project;
  MirrorFn mirror;
};

struct CheckResult {
  std::string name;
  bool passed = true;
  std::string detail;  // first counterexample description when failed
};

struct VerifyReport {
  std::vector<CheckResult> checks;
  bool ok() const {
    for (const auto& c : checks)
      if (!c.passed) return false;
    return true;
  }
};

VerifyReport verify_suite(const VerifyOptions& opts);

}  // namespace mdpopt
