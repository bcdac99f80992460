#include "linmar/mar/schedule.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

namespace linmar {

namespace {

std::vector<Index> step_sizes(Index n, Index k, SizeCurve curve) {
  std::vector<Index> sizes(static_cast<size_t>(k), 0);
  if (curve == SizeCurve::uniform) {
    Index base = n / k, rem = n % k;
    for (Index i = 0; i < k; ++i) sizes[i] = base + (i >= k - rem ? 1 : 0);
  } else {
    // Cosine ramp: cumulative committed count follows n*(1-cos(pi/2 * j/k)),
    // so early steps commit few tokens and late steps commit many.
    auto boundary = [&](Index j) {
      return static_cast<Index>(std::llround(n * (1.0 - std::cos(M_PI_2 * j / k))));
    };
    for (Index i = 0; i < k; ++i) sizes[i] = boundary(i + 1) - boundary(i);
    // Rounding can leave early steps empty; every step must commit something.
    for (auto& s : sizes)
      while (s < 1) {
        auto largest = std::max_element(sizes.begin(), sizes.end());
        if (*largest <= 1) throw ContractError("build_schedule: cannot rebalance step sizes");
        --*largest;
        ++s;
      }
    // Rounding can also locally invert the ramp; sort to keep it monotone.
    std::sort(sizes.begin(), sizes.end());
  }
  return sizes;
}

}  // namespace

MarSchedule build_schedule(Index n_tokens, Index k_steps, std::uint64_t seed, SizeCurve curve) {
  if (n_tokens < 1) throw ContractError("build_schedule: n_tokens must be >= 1");
  if (k_steps < 1 || k_steps > n_tokens)
    throw ContractError("build_schedule: k_steps must be in [1, n_tokens], got " +
                        std::to_string(k_steps) + " for " + std::to_string(n_tokens) + " tokens");

  std::vector<Index> perm(static_cast<size_t>(n_tokens));
  std::iota(perm.begin(), perm.end(), Index{0});
  std::mt19937_64 rng(seed);
  std::shuffle(perm.begin(), perm.end(), rng);

  std::vector<Index> sizes = step_sizes(n_tokens, k_steps, curve);

  MarSchedule sched;
  sched.n_tokens = n_tokens;
  size_t at = 0;
  for (Index s : sizes) {
    sched.sets.emplace_back(perm.begin() + at, perm.begin() + at + s);
    at += static_cast<size_t>(s);
  }
  if (at != perm.size()) throw ContractError("build_schedule: sizes do not cover the permutation");
  return sched;
}

}  // namespace linmar
