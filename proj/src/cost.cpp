#include "linmar/cost.hpp"

#include "json.hpp"

namespace linmar {

namespace {

std::int64_t convention_factor(const CostConfig& c) {
  return c.convention == FlopConvention::mac_as_two_flops ? 2 : 1;
}

}  // namespace

std::int64_t projection_flops(const CostConfig& c) {
  c.validate();
  return convention_factor(c) * 4 * c.n_tokens() * c.model_dim * c.model_dim;
}

std::int64_t softmax_core_flops(const CostConfig& c) {
  c.validate();
  return convention_factor(c) * 2 * c.n_tokens() * c.n_tokens() * c.model_dim;
}

std::int64_t linear_core_flops(const CostConfig& c) {
  c.validate();
  return convention_factor(c) * 2 * c.n_tokens() * c.model_dim * c.head_dim();
}

std::int64_t dwc_flops(const CostConfig& c) {
  c.validate();
  return convention_factor(c) * c.n_image * c.model_dim * c.dwc_kernel * c.dwc_kernel;
}

std::int64_t gate_flops(const CostConfig& c) {
  c.validate();
  return convention_factor(c) * 2 * c.n_image * c.model_dim;
}

std::int64_t softmax_attention_flops(const CostConfig& c) {
  std::int64_t total = softmax_core_flops(c);
  if (c.include_projections) total += projection_flops(c);
  return total;
}

std::int64_t linear_attention_flops(const CostConfig& c) {
  std::int64_t total = linear_core_flops(c);
  if (c.include_projections) total += projection_flops(c);
  if (c.include_dwc) total += dwc_flops(c);
  if (c.include_gate) total += gate_flops(c);
  return total;
}

ComplexityRatios complexity_ratios(const CostConfig& c) {
  c.validate();
  ComplexityRatios r;
  double n = static_cast<double>(c.n_tokens());
  double n_img = static_cast<double>(c.n_image);
  double d = static_cast<double>(c.head_dim());
  double k2 = static_cast<double>(c.dwc_kernel) * static_cast<double>(c.dwc_kernel);
  r.dwc_over_la = n_img * k2 / (n * d);
  r.dwc_bound = k2 / d;
  r.gate_over_la = n_img / (n * d);
  r.gate_bound = 1.0 / d;
  r.la_over_fa = d / n;
  return r;
}

CostReport cost_report(const CostConfig& c) {
  c.validate();
  CostReport r;
  r.config = c;
  r.items.push_back({"projections", projection_flops(c), 0});
  r.items.push_back({"softmax_core", softmax_core_flops(c), 0});
  r.items.push_back({"linear_core", linear_core_flops(c), 0});
  r.items.push_back({"dwc", dwc_flops(c), 0});
  r.items.push_back({"kv_gate", gate_flops(c), 0});
  r.softmax_total = softmax_attention_flops(c);
  r.linear_total = linear_attention_flops(c);
  r.reduction = 1.0 - static_cast<double>(r.linear_total) / static_cast<double>(r.softmax_total);
  r.ratios = complexity_ratios(c);
  return r;
}

std::string cost_report_json(const CostReport& r) {
  nlohmann::ordered_json j;
  j["config"] = {
      {"n_query", r.config.n_query},
      {"n_image", r.config.n_image},
      {"n_tokens", r.config.n_tokens()},
      {"model_dim", r.config.model_dim},
      {"n_heads", r.config.n_heads},
      {"head_dim", r.config.head_dim()},
      {"dwc_kernel", r.config.dwc_kernel},
      {"include_projections", r.config.include_projections},
      {"include_dwc", r.config.include_dwc},
      {"include_gate", r.config.include_gate},
      {"convention", to_string(r.config.convention)},
  };
  nlohmann::ordered_json items = nlohmann::ordered_json::array();
  for (const auto& it : r.items) {
    nlohmann::ordered_json entry;
    entry["label"] = it.label;
    entry["flops"] = it.flops;
    entry["params"] = it.params;
    items.push_back(std::move(entry));
  }
  j["items"] = std::move(items);
  j["totals"] = {
      {"softmax_attention", r.softmax_total},
      {"linear_attention", r.linear_total},
      {"reduction", r.reduction},
  };
  j["ratios"] = {
      {"dwc_over_la", r.ratios.dwc_over_la},     {"dwc_bound", r.ratios.dwc_bound},
      {"gate_over_la", r.ratios.gate_over_la},   {"gate_bound", r.ratios.gate_bound},
      {"la_over_fa", r.ratios.la_over_fa},
  };
  return j.dump(2) + "\n";
}

ParamReport param_report(const ModelSpec& spec) {
  spec.validate();
  ParamReport r;
  std::int64_t embeddings = 0, connector = 0, encoder = 0, decoder = 0;
  std::int64_t gates = 0, dwc_w = 0, dwc_b = 0, head = 0;
  for (const ParamDef& d : param_defs(spec)) {
    std::int64_t n = shape_numel(d.shape);
    if (d.name.rfind("embed.", 0) == 0)
      embeddings += n;
    else if (d.name.rfind("connector.", 0) == 0)
      connector += n;
    else if (d.name.rfind("encoder.", 0) == 0)
      encoder += n;
    else if (d.name.rfind("head.", 0) == 0)
      head += n;
    else if (d.name.find(".gate.") != std::string::npos)
      gates += n;
    else if (d.name.find(".dwc.w") != std::string::npos)
      dwc_w += n;
    else if (d.name.find(".dwc.b") != std::string::npos)
      dwc_b += n;
    else
      decoder += n;
  }
  r.items.push_back({"embeddings", 0, embeddings});
  r.items.push_back({"connector", 0, connector});
  r.items.push_back({"encoder", 0, encoder});
  r.items.push_back({"decoder_core", 0, decoder});
  r.items.push_back({"decoder_gates", 0, gates});
  r.items.push_back({"decoder_dwc", 0, dwc_w});
  r.items.push_back({"decoder_dwc_bias", 0, dwc_b});
  r.items.push_back({"flow_head", 0, head});
  for (const auto& it : r.items) r.total += it.params;
  return r;
}

std::string param_report_json(const ParamReport& r) {
  nlohmann::ordered_json j;
  nlohmann::ordered_json items = nlohmann::ordered_json::object();
  for (const auto& it : r.items) items[it.label] = it.params;
  j["params"] = std::move(items);
  j["total"] = r.total;
  return j.dump(2) + "\n";
}

}  // namespace linmar
