#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "linmar/mar/model.hpp"

// Analytical cost model for one attention module at a given shape, mirroring
// the complexity accounting of the architecture it implements: multiplies and
// their paired accumulates count as one FLOP each under mac_as_one_flop
// (mac_as_two_flops doubles every count exactly); kernel evaluations, softmax
// exponentials, normalizer dots and divisions are dropped as lower-order.
//
//   projections      4 N D^2
//   softmax core     2 N^2 D          (scores + weighted sum)
//   linearized core  2 N D d          (h heads x 2 N d^2)
//   depthwise conv   N_img D k^2
//   kv gate          2 N_img D        (image tokens, as in the source analysis)
//
// Instrumented plain-loop kernels (instrumented.hpp) must reproduce the
// attention-core counts exactly on small inputs.

namespace linmar {

enum class FlopConvention { mac_as_one_flop, mac_as_two_flops };

inline const char* to_string(FlopConvention c) {
  return c == FlopConvention::mac_as_one_flop ? "mac_as_one_flop" : "mac_as_two_flops";
}

inline FlopConvention flop_convention_from_string(const std::string& s) {
  if (s == "mac_as_one_flop") return FlopConvention::mac_as_one_flop;
  if (s == "mac_as_two_flops") return FlopConvention::mac_as_two_flops;
  throw ConfigError("unknown flop convention '" + s + "' (mac_as_one_flop|mac_as_two_flops)");
}

struct CostConfig {
  std::int64_t n_query = 0;
  std::int64_t n_image = 0;
  std::int64_t model_dim = 0;
  std::int64_t n_heads = 1;
  std::int64_t dwc_kernel = 5;
  bool include_projections = true;
  bool include_dwc = true;
  bool include_gate = true;
  FlopConvention convention = FlopConvention::mac_as_one_flop;

  std::int64_t n_tokens() const { return n_query + n_image; }
  std::int64_t head_dim() const { return model_dim / n_heads; }

  void validate() const {
    if (n_query < 0 || n_image < 0 || n_tokens() < 1)
      throw ConfigError("CostConfig: need at least one token");
    if (model_dim < 1 || n_heads < 1 || model_dim % n_heads != 0)
      throw ConfigError("CostConfig: model_dim must be a positive multiple of n_heads");
    if (dwc_kernel < 1 || dwc_kernel % 2 == 0) throw ConfigError("CostConfig: dwc_kernel must be odd");
  }
};

std::int64_t projection_flops(const CostConfig& c);
std::int64_t softmax_core_flops(const CostConfig& c);
std::int64_t linear_core_flops(const CostConfig& c);
std::int64_t dwc_flops(const CostConfig& c);
std::int64_t gate_flops(const CostConfig& c);

// Full-module totals under the config's include flags.
std::int64_t softmax_attention_flops(const CostConfig& c);
std::int64_t linear_attention_flops(const CostConfig& c);

// Leading-term ratios with the constants stripped, as in the source
// complexity analysis, plus their shape-independent bounds.
struct ComplexityRatios {
  double dwc_over_la = 0;   // N_img k^2 / (N d)
  double dwc_bound = 0;     // k^2 / d
  double gate_over_la = 0;  // N_img / (N d)
  double gate_bound = 0;    // 1 / d
  double la_over_fa = 0;    // d / N
};

ComplexityRatios complexity_ratios(const CostConfig& c);

struct CostItem {
  std::string label;
  std::int64_t flops = 0;
  std::int64_t params = 0;
};

struct CostReport {
  CostConfig config;
  std::vector<CostItem> items;
  std::int64_t softmax_total = 0;
  std::int64_t linear_total = 0;
  double reduction = 0;  // 1 - linear/softmax
  ComplexityRatios ratios;
};

CostReport cost_report(const CostConfig& c);
std::string cost_report_json(const CostReport& r);  // stable key order

struct ParamReport {
  std::vector<CostItem> items;  // flops fields stay 0
  std::int64_t total = 0;
};

ParamReport param_report(const ModelSpec& spec);
std::string param_report_json(const ParamReport& r);

}  // namespace linmar
