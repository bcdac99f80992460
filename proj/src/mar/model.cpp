#include "linmar/mar/model.hpp"

#include <cmath>

namespace linmar {

namespace {

Shape gate_shape(const ModelSpec& s) {
  return s.gate_sharing == GateSharing::head_wise ? Shape{s.n_heads, s.n_tokens()}
                                                  : Shape{s.n_tokens()};
}

void append_stack_defs(std::vector<ParamDef>& defs, const ModelSpec& s, const std::string& stack,
                       Index layers, LayerRole role) {
  Index d = s.model_dim;
  Index f = s.ffn_mult * d;
  for (Index i = 0; i < layers; ++i) {
    std::string p = stack + "." + std::to_string(i) + ".";
    defs.push_back({p + "norm1.g", {1, d}, InitKind::ones});
    defs.push_back({p + "attn.wq", {d, d}, InitKind::projection});
    defs.push_back({p + "attn.wk", {d, d}, InitKind::projection});
    defs.push_back({p + "attn.wv", {d, d}, InitKind::projection});
    defs.push_back({p + "attn.wo", {d, d}, InitKind::projection});
    if (role == LayerRole::decoder) {
      if (gate_mode_has_gk(s.gate_mode)) defs.push_back({p + "gate.k", gate_shape(s), InitKind::ones});
      if (gate_mode_has_gv(s.gate_mode)) defs.push_back({p + "gate.v", gate_shape(s), InitKind::ones});
      if (gate_mode_has_gn(s.gate_mode)) defs.push_back({p + "gate.n", gate_shape(s), InitKind::ones});
      if (s.use_dwc) {
        defs.push_back({p + "dwc.w", {d, s.dwc_kernel_size, s.dwc_kernel_size}, InitKind::dwc_taps});
        defs.push_back({p + "dwc.b", {d}, InitKind::zeros});
      }
    }
    defs.push_back({p + "norm2.g", {1, d}, InitKind::ones});
    defs.push_back({p + "ffn.w1", {d, f}, InitKind::projection});
    defs.push_back({p + "ffn.b1", {1, f}, InitKind::zeros});
    defs.push_back({p + "ffn.w2", {f, d}, InitKind::projection});
    defs.push_back({p + "ffn.b2", {1, d}, InitKind::zeros});
  }
}

}  // namespace

std::vector<ParamDef> param_defs(const ModelSpec& spec) {
  spec.validate();
  std::vector<ParamDef> defs;
  Index d = spec.model_dim;
  defs.push_back({"embed.token.w", {spec.token_dim, d}, InitKind::projection});
  defs.push_back({"embed.mask", {1, d}, InitKind::embedding});
  defs.push_back({"embed.pos", {spec.layout.n_image(), d}, InitKind::embedding});
  defs.push_back({"embed.query", {spec.layout.n_query, d}, InitKind::embedding});
  defs.push_back({"embed.class", {spec.n_classes + 1, d}, InitKind::embedding});
  append_stack_defs(defs, spec, "connector", spec.connector_layers, LayerRole::connector);
  append_stack_defs(defs, spec, "encoder", spec.encoder_layers, LayerRole::encoder);
  append_stack_defs(defs, spec, "decoder", spec.decoder_layers, LayerRole::decoder);
  FlowHeadSpec h = spec.head_spec();
  for (Index l = 0; l < h.depth; ++l) {
    Index in = l == 0 ? h.input_dim() : h.width;
    Index out = l == h.depth - 1 ? h.token_dim : h.width;
    defs.push_back({"head.w" + std::to_string(l), {in, out}, InitKind::projection});
    defs.push_back({"head.b" + std::to_string(l), {1, out}, InitKind::zeros});
  }
  return defs;
}

MarModel::MarModel(ModelSpec spec, std::uint64_t init_seed) : spec_(std::move(spec)) {
  spec_.validate();
  std::mt19937_64 rng(init_seed);
  std::normal_distribution<double> unit(0.0, 1.0);
  for (const ParamDef& def : param_defs(spec_)) {
    Tensord t = Tensord::zeros(def.shape);
    switch (def.init) {
      case InitKind::projection: {
        double sd = 1.0 / std::sqrt(static_cast<double>(def.shape[0]));
        for (Index i = 0; i < t.numel(); ++i) t.data[i] = sd * unit(rng);
        break;
      }
      case InitKind::embedding:
        for (Index i = 0; i < t.numel(); ++i) t.data[i] = 0.02 * unit(rng);
        break;
      case InitKind::ones:
        t = Tensord::ones(def.shape);
        break;
      case InitKind::zeros:
        break;
      case InitKind::dwc_taps: {
        auto kern = DwcKernel<double>::near_identity(spec_.model_dim, spec_.dwc_kernel_size, rng);
        t.data = kern.weights.data;
        break;
      }
    }
    store_.add(def.name, std::move(t));
  }
}

MarModel::MarModel(ModelSpec spec, ParamStore store) : spec_(std::move(spec)), store_(std::move(store)) {
  spec_.validate();
  auto defs = param_defs(spec_);
  if (store_.size() != defs.size())
    throw ContractError("MarModel: store has " + std::to_string(store_.size()) + " parameters, spec needs " +
                        std::to_string(defs.size()));
  for (const ParamDef& def : defs) {
    const Tensord& t = store_.at(def.name);  // throws on missing
    if (t.shape != def.shape)
      throw ContractError("MarModel: parameter '" + def.name + "' is " + shape_str(t.shape) +
                          ", expected " + shape_str(def.shape));
  }
}

Tensord MarModel::run_block(const Params& p, const std::string& prefix, const BlockConfig& block,
                            const Tensord& x) const {
  block.validate();
  auto param = [&](const char* name) -> const Tensord& {
    auto it = p.find(prefix + name);
    if (it == p.end()) throw ContractError("run_block: missing parameter '" + prefix + name + "'");
    return it->second;
  };

  AttentionConfig cfg = spec_.attention_config(x.rows());
  Tensord a = rmsnorm(x, param("norm1.g"));
  Tensord q = matmul(a, param("attn.wq"));
  Tensord k = matmul(a, param("attn.wk"));
  Tensord v = matmul(a, param("attn.wv"));

  GateSet<double> gates;
  if (block.gate_mode != GateMode::none) {
    gates.mode = block.gate_mode;
    gates.sharing = spec_.gate_sharing;
    gates.n_heads = spec_.n_heads;
    gates.n_tokens = spec_.n_tokens();
    if (gate_mode_has_gk(gates.mode)) gates.g_k = param("gate.k");
    if (gate_mode_has_gv(gates.mode)) gates.g_v = param("gate.v");
    if (gate_mode_has_gn(gates.mode)) gates.g_n = param("gate.n");
  }

  Index d = cfg.head_dim();
  std::vector<Tensord> heads;
  heads.reserve(static_cast<size_t>(cfg.n_heads));
  for (Index h = 0; h < cfg.n_heads; ++h) {
    Tensord qh = slice_cols(q, h * d, d);
    Tensord kh = slice_cols(k, h * d, d);
    Tensord vh = slice_cols(v, h * d, d);
    heads.push_back(block.gate_mode != GateMode::none
                        ? gated_linear_attention(qh, kh, vh, gates, cfg, h).output
                        : linear_attention_div_linear(qh, kh, vh, cfg).output);
  }
  Tensord attn = concat_cols(heads);

  if (block.use_dwc) {
    // The conv sees the same normalized image features the attention sees,
    // and its output joins the head concat before the output projection.
    DwcKernel<double> kern;
    kern.size = spec_.dwc_kernel_size;
    kern.weights = param("dwc.w");
    kern.bias = param("dwc.b");
    Tensord img = slice_rows(a, spec_.layout.n_query, spec_.layout.n_image());
    Tensord conv = depthwise_conv2d(img, spec_.layout, kern);
    attn = fuse_locality(attn, conv, spec_.layout);
  }

  Tensord x1 = add(x, matmul(attn, param("attn.wo")));
  Tensord b = rmsnorm(x1, param("norm2.g"));
  Tensord ffn = linear_layer(silu(linear_layer(b, param("ffn.w1"), param("ffn.b1"))),
                             param("ffn.w2"), param("ffn.b2"));
  return add(x1, ffn);
}

Tensord MarModel::run_stack(const Params& p, const std::string& stack, Index layers, LayerRole role,
                            const Tensord& x) const {
  BlockConfig block = spec_.block_config(role);
  Tensord h = x;
  for (Index i = 0; i < layers; ++i)
    h = run_block(p, stack + "." + std::to_string(i) + ".", block, h);
  return h;
}

Tensord MarModel::predict_conditions(const Params& p, const Tensord& known_tokens,
                                     const std::vector<std::uint8_t>& known_mask, Index class_id) const {
  const TokenLayout& lay = spec_.layout;
  if (known_tokens.shape != Shape{lay.n_image(), spec_.token_dim})
    throw DimensionError("predict_conditions: known_tokens " + shape_str(known_tokens.shape) +
                         ", expected " + shape_str({lay.n_image(), spec_.token_dim}));
  if (static_cast<Index>(known_mask.size()) != lay.n_image())
    throw DimensionError("predict_conditions: mask covers " + std::to_string(known_mask.size()) +
                         " of " + std::to_string(lay.n_image()) + " image slots");
  if (class_id < 0 || class_id > spec_.null_class())
    throw ContractError("predict_conditions: class_id " + std::to_string(class_id) + " out of range");

  auto param = [&](const char* name) -> const Tensord& {
    auto it = p.find(name);
    if (it == p.end()) throw ContractError("predict_conditions: missing parameter '" + std::string(name) + "'");
    return it->second;
  };

  std::vector<Index> known_idx;
  for (Index i = 0; i < lay.n_image(); ++i)
    if (known_mask[static_cast<size_t>(i)]) known_idx.push_back(i);

  // Connector: class token + query embeddings; drop the class row after.
  Tensord cls = slice_rows(param("embed.class"), class_id, 1);
  Tensord conn_in = concat_rows<double>({cls, param("embed.query")});
  Tensord conn_out = run_stack(p, "connector", spec_.connector_layers, LayerRole::connector, conn_in);
  Tensord q_feats = slice_rows(conn_out, 1, lay.n_query);

  // Encoder: query features + embedded known tokens. Unknown rows of
  // known_tokens are never gathered, so their contents cannot leak in.
  Tensord enc_in = q_feats;
  Index n_known = static_cast<Index>(known_idx.size());
  if (n_known > 0) {
    Tensord tok = matmul(gather_rows(known_tokens, known_idx), param("embed.token.w"));
    Tensord known_emb = add(tok, gather_rows(param("embed.pos"), known_idx));
    enc_in = concat_rows<double>({q_feats, known_emb});
  }
  Tensord enc_out = run_stack(p, "encoder", spec_.encoder_layers, LayerRole::encoder, enc_in);

  // Decoder: refined queries + a full image canvas of mask embeddings with
  // the encoded known tokens scattered back into their slots.
  Tensord q2 = slice_rows(enc_out, 0, lay.n_query);
  Tensord canvas = rowvec_add(param("embed.pos"), param("embed.mask"));
  if (n_known > 0)
    canvas = scatter_rows(canvas, known_idx, slice_rows(enc_out, lay.n_query, n_known));
  Tensord dec_in = concat_rows<double>({q2, canvas});
  return run_stack(p, "decoder", spec_.decoder_layers, LayerRole::decoder, dec_in);
}

FlowHeadParams<double> MarModel::head_params(const Params& p) const {
  FlowHeadSpec spec = spec_.head_spec();
  FlowHeadParams<double> out;
  for (Index l = 0; l < spec.depth; ++l) {
    auto wi = p.find("head.w" + std::to_string(l));
    auto bi = p.find("head.b" + std::to_string(l));
    if (wi == p.end() || bi == p.end())
      throw ContractError("head_params: missing flow head layer " + std::to_string(l));
    out.w.push_back(wi->second);
    out.b.push_back(bi->second);
  }
  out.validate(spec);
  return out;
}

std::vector<GateSet<double>> MarModel::decoder_gates() const {
  std::vector<GateSet<double>> out;
  for (Index i = 0; i < spec_.decoder_layers; ++i) {
    GateSet<double> g;
    g.mode = spec_.gate_mode;
    g.sharing = spec_.gate_sharing;
    g.n_heads = spec_.n_heads;
    g.n_tokens = spec_.n_tokens();
    std::string prefix = "decoder." + std::to_string(i) + ".";
    if (gate_mode_has_gk(g.mode)) g.g_k = store_.at(prefix + "gate.k");
    if (gate_mode_has_gv(g.mode)) g.g_v = store_.at(prefix + "gate.v");
    if (gate_mode_has_gn(g.mode)) g.g_n = store_.at(prefix + "gate.n");
    g.validate();
    out.push_back(std::move(g));
  }
  return out;
}

}  // namespace linmar
