#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

// The statistical verification suite: every closed-form prediction checked
// at desk scale, one pass/fail result per criterion. Shared by the `verify`
// CLI subcommand and the acceptance test binary.

namespace kbm {

struct CriterionResult {
  int id = 0;
  std::string name;
  bool pass = false;
  std::string detail;  // measured values and thresholds
  double seconds = 0.0;
};

struct VerifyOptions {
  std::uint64_t seed = 20260801;
  int workers = 0;               // 0 = all hardware threads
  std::ostream* progress = nullptr;  // per-criterion lines as they finish
};

std::vector<CriterionResult> run_acceptance(const VerifyOptions& opt);

std::string format_result_line(const CriterionResult& r);

}  // namespace kbm
