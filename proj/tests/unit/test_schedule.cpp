#include <doctest.h>

#include <numeric>

#include "linmar/mar/schedule.hpp"

using namespace linmar;

namespace {
std::vector<Index> sizes_of(const MarSchedule& s) {
  std::vector<Index> out;
  for (const auto& set : s.sets) out.push_back(static_cast<Index>(set.size()));
  return out;
}
}  // namespace

TEST_CASE("uniform curve slices near-equal sets, extras at the end") {
  MarSchedule s = build_schedule(10, 3, 0, SizeCurve::uniform);
  CHECK(sizes_of(s) == std::vector<Index>{3, 3, 4});
  MarSchedule even = build_schedule(12, 3, 0, SizeCurve::uniform);
  CHECK(sizes_of(even) == std::vector<Index>{4, 4, 4});
}

TEST_CASE("cosine curve sizes are nondecreasing and cover everything") {
  for (Index n : {16, 64, 257}) {
    for (Index k : {1, 4, 7}) {
      MarSchedule s = build_schedule(n, k, 99, SizeCurve::cosine);
      std::vector<Index> sz = sizes_of(s);
      CHECK(static_cast<Index>(sz.size()) == k);
      CHECK(std::accumulate(sz.begin(), sz.end(), Index{0}) == n);
      for (size_t i = 0; i + 1 < sz.size(); ++i) CHECK(sz[i] <= sz[i + 1]);
      for (Index v : sz) CHECK(v >= 1);
    }
  }
}

TEST_CASE("cosine start is tiny next to its finish at generation scale") {
  MarSchedule s = build_schedule(4096, 64, 5, SizeCurve::cosine);
  std::vector<Index> sz = sizes_of(s);
  CHECK(sz.front() * 10 < sz.back());  // early steps commit few tokens
}

TEST_CASE("schedule is a permutation partition, reproducible by seed") {
  MarSchedule a = build_schedule(97, 13, 1234, SizeCurve::cosine);
  MarSchedule b = build_schedule(97, 13, 1234, SizeCurve::cosine);
  CHECK(a.sets == b.sets);
  MarSchedule c = build_schedule(97, 13, 1235, SizeCurve::cosine);
  CHECK(a.sets != c.sets);

  std::vector<Index> seen;
  for (const auto& set : a.sets) seen.insert(seen.end(), set.begin(), set.end());
  std::sort(seen.begin(), seen.end());
  for (Index i = 0; i < 97; ++i) CHECK(seen[static_cast<size_t>(i)] == i);
}

TEST_CASE("degenerate and invalid schedule arguments") {
  MarSchedule one = build_schedule(5, 5, 7, SizeCurve::cosine);
  for (const auto& set : one.sets) CHECK(set.size() == 1);  // K = N forces singletons
  CHECK_THROWS_AS(build_schedule(4, 5, 7, SizeCurve::uniform), ContractError);
  CHECK_THROWS_AS(build_schedule(0, 1, 7, SizeCurve::uniform), ContractError);
  CHECK_THROWS_AS(build_schedule(4, 0, 7, SizeCurve::uniform), ContractError);
}

TEST_CASE("size curve names round-trip") {
  CHECK(size_curve_from_string("cosine") == SizeCurve::cosine);
  CHECK(size_curve_from_string("uniform") == SizeCurve::uniform);
  CHECK_THROWS_AS(size_curve_from_string("linear"), ConfigError);
  CHECK(std::string(to_string(SizeCurve::cosine)) == "cosine");
}
