#include <doctest.h>

#include "linmar/cost.hpp"

using namespace linmar;

namespace {
CostConfig headline_cfg() {
  CostConfig c;
  c.n_query = 1024;
  c.n_image = 4096;
  c.model_dim = 1536;
  c.n_heads = 16;
  c.dwc_kernel = 5;
  return c;
}
}  // namespace

TEST_CASE("unit-scale formulas") {
  CostConfig c;
  c.n_query = 0;
  c.n_image = 1;
  c.model_dim = 1;
  c.n_heads = 1;
  c.dwc_kernel = 1;
  c.include_projections = false;
  CHECK(softmax_core_flops(c) == 2);
  CHECK(linear_core_flops(c) == 2);
  CHECK(dwc_flops(c) == 1);
  CHECK(gate_flops(c) == 2);
  CHECK(softmax_attention_flops(c) == 2);
  c.include_dwc = c.include_gate = false;
  CHECK(linear_attention_flops(c) == 2);
}

TEST_CASE("doubling N quadruples the softmax core exactly") {
  CostConfig c = headline_cfg();
  c.include_projections = false;
  std::int64_t base = softmax_core_flops(c);
  c.n_image = 2 * c.n_tokens();  // doubles n_tokens
  c.n_query = 0;
  CHECK(softmax_core_flops(c) == 4 * base);
}

TEST_CASE("flops are monotone in every dimension") {
  CostConfig base = headline_cfg();
  auto total = [](const CostConfig& c) {
    return softmax_attention_flops(c) + linear_attention_flops(c);
  };
  CostConfig more = base;
  more.n_image += 512;
  CHECK(total(more) > total(base));
  more = base;
  more.model_dim += 1536;  // keeps divisibility by heads
  CHECK(total(more) > total(base));
  more = base;
  more.dwc_kernel += 2;
  CHECK(total(more) > total(base));
}

TEST_CASE("convention doubling is exact on every item") {
  CostConfig one = headline_cfg();
  CostConfig two = headline_cfg();
  two.convention = FlopConvention::mac_as_two_flops;
  CHECK(projection_flops(two) == 2 * projection_flops(one));
  CHECK(softmax_core_flops(two) == 2 * softmax_core_flops(one));
  CHECK(linear_core_flops(two) == 2 * linear_core_flops(one));
  CHECK(dwc_flops(two) == 2 * dwc_flops(one));
  CHECK(gate_flops(two) == 2 * gate_flops(one));
  CHECK(flop_convention_from_string("mac_as_two_flops") == FlopConvention::mac_as_two_flops);
  CHECK_THROWS_AS(flop_convention_from_string("macs"), ConfigError);
}

TEST_CASE("headline totals and ratios") {
  CostReport r = cost_report(headline_cfg());
  CHECK(r.softmax_total == 128849018880);
  CHECK(r.linear_total == 49998200832);
  CHECK(r.reduction == doctest::Approx(0.612).epsilon(0.01));
  // Items list projections once; the two totals each include them.
  std::int64_t items = 0;
  for (const auto& item : r.items) items += item.flops;
  CHECK(items == r.softmax_total + r.linear_total - projection_flops(headline_cfg()));

  ComplexityRatios rat = complexity_ratios(headline_cfg());
  CHECK(rat.dwc_bound == doctest::Approx(25.0 / 96));
  CHECK(rat.gate_bound == doctest::Approx(1.0 / 96));
  CHECK(rat.la_over_fa == doctest::Approx(96.0 / 5120));
  CHECK(rat.dwc_over_la <= rat.dwc_bound);
  CHECK(rat.gate_over_la <= rat.gate_bound);
}

TEST_CASE("report totals equal the sum of their parts") {
  CostConfig c = headline_cfg();
  CostReport r = cost_report(c);
  CHECK(r.softmax_total == projection_flops(c) + softmax_core_flops(c));
  CHECK(r.linear_total ==
        projection_flops(c) + linear_core_flops(c) + dwc_flops(c) + gate_flops(c));
  CHECK(r.reduction ==
        doctest::Approx(1.0 - double(r.linear_total) / double(r.softmax_total)).epsilon(1e-12));
}

TEST_CASE("include flags prune their items") {
  CostConfig c = headline_cfg();
  c.include_dwc = false;
  c.include_gate = false;
  CHECK(linear_attention_flops(c) == projection_flops(c) + linear_core_flops(c));
  c.include_projections = false;
  CHECK(linear_attention_flops(c) == linear_core_flops(c));
}

TEST_CASE("cost config validation") {
  CostConfig c = headline_cfg();
  c.n_heads = 5;  // 1536 % 5 != 0
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = headline_cfg();
  c.dwc_kernel = 4;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = headline_cfg();
  c.n_query = 0;
  c.n_image = 0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
}

TEST_CASE("json report carries stable keys in order") {
  std::string json = cost_report_json(cost_report(headline_cfg()));
  size_t cfg_at = json.find("\"config\"");
  size_t items_at = json.find("\"items\"");
  size_t totals_at = json.find("\"totals\"");
  size_t ratios_at = json.find("\"ratios\"");
  REQUIRE(cfg_at != std::string::npos);
  CHECK(cfg_at < items_at);
  CHECK(items_at < totals_at);
  CHECK(totals_at < ratios_at);
  CHECK(json.find("\"softmax_attention\": 128849018880") != std::string::npos);
  CHECK(json.find("\"linear_attention\": 49998200832") != std::string::npos);
}

TEST_CASE("parameter report itemizes the toy model consistently") {
  ModelSpec spec;  // defaults
  ParamReport r = param_report(spec);
  std::int64_t sum = 0;
  bool saw_gates = false, saw_dwc = false;
  for (const auto& item : r.items) {
    CHECK(item.params >= 0);
    sum += item.params;
    if (item.label == "decoder_gates") {
      saw_gates = true;
      CHECK(item.params == gate_param_count(spec.gate_mode, spec.gate_sharing, spec.n_heads,
                                            spec.n_tokens(), spec.decoder_layers));
    }
    if (item.label == "decoder_dwc") {
      saw_dwc = true;
      CHECK(item.params == dwc_param_count(spec.dwc_kernel_size, spec.model_dim,
                                           spec.decoder_layers));
    }
  }
  CHECK(saw_gates);
  CHECK(saw_dwc);
  CHECK(sum == r.total);
}
