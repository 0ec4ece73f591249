// Runs every acceptance criterion and prints one pass/fail line each.

#include "kbm/verify.hpp"

#include <cstdlib>
#include <iostream>

int main(int argc, char** argv) {
  kbm::VerifyOptions opt;
  opt.progress = &std::cout;
  if (const char* seed = std::getenv("KBM_SEED")) opt.seed = std::strtoull(seed, nullptr, 10);
  if (argc > 1) opt.seed = std::strtoull(argv[1], nullptr, 10);
  const auto results = kbm::run_acceptance(opt);
  int failed = 0;
  for (const auto& r : results)
    if (!r.pass) ++failed;
  std::cout << (failed == 0 ? "all criteria passed" : std::to_string(failed) + " criteria FAILED")
            << " (" << results.size() << " run)" << std::endl;
  return failed == 0 ? 0 : 1;
}
