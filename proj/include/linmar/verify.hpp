#pragma once

#include <functional>
#include <string>
#include <vector>

#include "linmar/tensor.hpp"

// Self-contained verification suites: oracle equivalences, algebraic
// invariants, finite-difference gradient checks, cost-model cross-checks.
// The CLI's `verify` verb and the acceptance harness both run these.
//
// The finite-difference oracle only ever evaluates forward passes, so it
// stays independent of the tape it is checking.

namespace linmar {

struct CheckResult {
  std::string name;
  bool pass = false;
  std::string detail;  // short evidence: worst error, counts, ...
};

const std::vector<std::string>& verify_suite_names();
std::vector<CheckResult> run_verify_suite(const std::string& suite, std::uint64_t seed);
std::vector<CheckResult> run_all_verify_suites(std::uint64_t seed);

// Central finite differences of a scalar function at x, coordinate by
// coordinate: (f(x+h e_i) - f(x-h e_i)) / 2h.
Tensord fd_grad(const std::function<double(const Tensord&)>& f, const Tensord& x, double step = 1e-5);

// |a-b| relative to the larger magnitude, floored to keep zeros comparable.
double rel_err(double a, double b);
double max_rel_err(const Tensord& a, const Tensord& b);
double max_abs_diff(const Tensord& a, const Tensord& b);

}  // namespace linmar
