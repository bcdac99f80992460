// Acceptance harness: one line per criterion, nonzero exit on any failure.
// Each criterion delegates to the library's verification suites so the CLI
// `verify` verb and this binary can never drift apart.

#include <chrono>
#include <cstdio>
#include <string>
#include <vector>

#include "linmar/verify.hpp"

namespace {

int g_failures = 0;

void criterion(int number, const char* title, const std::vector<std::string>& suites,
               double budget_seconds, std::uint64_t seed) {
  using clock = std::chrono::steady_clock;
  auto t0 = clock::now();
  std::vector<linmar::CheckResult> results;
  std::string error;
  try {
    for (const std::string& s : suites) {
      std::vector<linmar::CheckResult> r = linmar::run_verify_suite(s, seed);
      results.insert(results.end(), r.begin(), r.end());
    }
  } catch (const std::exception& e) {
    error = e.what();
  }
  double elapsed = std::chrono::duration<double>(clock::now() - t0).count();

  bool pass = error.empty();
  std::string detail;
  for (const auto& r : results) {
    if (!r.pass) {
      pass = false;
      if (!detail.empty()) detail += "; ";
      detail += r.name;
    }
  }
  if (!error.empty()) detail = "exception: " + error;
  if (budget_seconds > 0 && elapsed > budget_seconds) {
    pass = false;
    detail += (detail.empty() ? "" : "; ") + std::string("over time budget");
  }

  std::printf("[%s] criterion %2d: %s (%zu checks, %.2fs)%s%s\n", pass ? "PASS" : "FAIL", number,
              title, results.size(), elapsed, detail.empty() ? "" : " -- ", detail.c_str());
  std::fflush(stdout);
  if (!pass) ++g_failures;
}

}  // namespace

int main(int argc, char** argv) {
  std::uint64_t seed = argc > 1 ? std::strtoull(argv[1], nullptr, 10) : 0;
  std::printf("acceptance run, seed %llu\n", static_cast<unsigned long long>(seed));

  criterion(1, "row-softmax worked example to 4 decimals", {"softmax_example"}, 1.0, seed);
  criterion(2, "quadratic vs linearized equivalence, both paradigms", {"equivalence"}, 30.0, seed);
  criterion(3, "normalization identities for both paradigms", {"normalization"}, 0, seed);
  criterion(4, "gate modes against quadratic oracles + invariances", {"gates"}, 0, seed);
  criterion(5, "depthwise conv oracle, delta identity, fusion", {"locality"}, 0, seed);
  criterion(6, "finite-difference gradient checks on every op", {"gradients"}, 0, seed);
  criterion(7, "headline FLOP totals and reduction", {"flops"}, 1.0, seed);
  criterion(8, "parameter counts and complexity ratios", {"params"}, 0, seed);
  criterion(9, "schedule partition and generation properties", {"mar"}, 0, seed);
  criterion(10, "flow head: euler exactness and mixture toy", {"flow"}, 300.0, seed);
  criterion(11, "instrumented MACs equal analytical formulas", {"counters"}, 0, seed);

  if (g_failures > 0) {
    std::printf("ACCEPTANCE FAILED: %d criterion(s)\n", g_failures);
    return 1;
  }
  std::printf("ACCEPTANCE PASSED: all 11 criteria\n");
  return 0;
}
