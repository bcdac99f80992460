#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "linmar/errors.hpp"
#include "linmar/tensor.hpp"

// K-step random-order generation schedule: a random permutation of all token
// indices is cut into K disjoint, non-empty sets that together cover every
// index exactly once. The size curve controls how many tokens each step
// commits: uniform near-equal sizes, or a cosine ramp that commits few tokens
// early and many late.

namespace linmar {

enum class SizeCurve { uniform, cosine };

inline const char* to_string(SizeCurve c) { return c == SizeCurve::uniform ? "uniform" : "cosine"; }

inline SizeCurve size_curve_from_string(const std::string& s) {
  if (s == "uniform") return SizeCurve::uniform;
  if (s == "cosine") return SizeCurve::cosine;
  throw ConfigError("unknown schedule curve '" + s + "' (uniform|cosine)");
}

struct MarSchedule {
  Index n_tokens = 0;
  std::vector<std::vector<Index>> sets;  // K disjoint non-empty sets covering 0..n_tokens-1
};

MarSchedule build_schedule(Index n_tokens, Index k_steps, std::uint64_t seed,
                           SizeCurve curve = SizeCurve::cosine);

}  // namespace linmar
