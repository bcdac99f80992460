#pragma once

#include <cstdint>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "linmar/attention.hpp"
#include "linmar/gating.hpp"
#include "linmar/locality.hpp"
#include "linmar/mar/flow.hpp"

// Desk-scale masked-set generation backbone.
//
// Three stacks of residual pre-norm blocks share one block shape
// (norm -> multi-head linear attention -> residual, norm -> FFN -> residual):
//   connector: injects the class condition into the query tokens
//   encoder:   refines query features together with the known image tokens
//   decoder:   full sequence (queries + every image slot); the only stack
//              where the per-token KV gates and the depthwise conv are legal
// The decoder emits one condition vector per position; image-slot conditions
// feed the flow head.

namespace linmar {

enum class LayerRole { connector, encoder, decoder };

inline const char* to_string(LayerRole r) {
  switch (r) {
    case LayerRole::connector: return "connector";
    case LayerRole::encoder: return "encoder";
    case LayerRole::decoder: return "decoder";
  }
  return "?";
}

// Role tag plus the extras a block is allowed to carry. Gates and the
// depthwise conv are decoder-only; building any other role with them is a
// hard error, not a silent ignore.
struct BlockConfig {
  LayerRole role = LayerRole::decoder;
  GateMode gate_mode = GateMode::none;
  bool use_dwc = false;

  void validate() const {
    if (role != LayerRole::decoder && (gate_mode != GateMode::none || use_dwc))
      throw ContractError(std::string("BlockConfig: ") + to_string(role) +
                          " blocks may not carry gates or a depthwise conv");
  }
};

struct ModelSpec {
  Index connector_layers = 2;
  Index encoder_layers = 2;
  Index decoder_layers = 2;
  Index model_dim = 64;
  Index n_heads = 4;
  TokenLayout layout{4, 8, 8};  // n_query then grid_h x grid_w image tokens
  Index token_dim = 4;
  Index n_classes = 2;
  Kernel kernel = Kernel::relu;
  double epsilon = 1e-6;
  bool strict_normalizer = false;
  GateMode gate_mode = GateMode::kv;
  GateSharing gate_sharing = GateSharing::head_wise;
  bool use_dwc = true;
  Index dwc_kernel_size = 5;
  Index ffn_mult = 4;
  Index head_width = 128;
  Index head_depth = 3;

  Index n_tokens() const { return layout.n_total(); }
  Index null_class() const { return n_classes; }  // extra embedding row for unconditional

  FlowHeadSpec head_spec() const { return FlowHeadSpec{model_dim, token_dim, head_width, head_depth}; }

  AttentionConfig attention_config(Index n) const {
    AttentionConfig c;
    c.n_tokens = n;
    c.model_dim = model_dim;
    c.n_heads = n_heads;
    c.kernel = kernel;
    c.paradigm = Paradigm::division;
    c.epsilon = epsilon;
    c.strict_normalizer = strict_normalizer;
    return c;
  }

  BlockConfig block_config(LayerRole role) const {
    BlockConfig b;
    b.role = role;
    b.gate_mode = role == LayerRole::decoder ? gate_mode : GateMode::none;
    b.use_dwc = role == LayerRole::decoder && use_dwc;
    b.validate();
    return b;
  }

  void validate() const {
    layout.validate();
    if (connector_layers < 1 || encoder_layers < 1 || decoder_layers < 1)
      throw ContractError("ModelSpec: every stack needs at least one layer");
    if (model_dim < 1 || n_heads < 1 || model_dim % n_heads != 0)
      throw ContractError("ModelSpec: model_dim must be a positive multiple of n_heads");
    if (token_dim < 1) throw ContractError("ModelSpec: token_dim must be positive");
    if (n_classes < 1) throw ContractError("ModelSpec: n_classes must be positive");
    if (ffn_mult < 1) throw ContractError("ModelSpec: ffn_mult must be positive");
    if (use_dwc && (dwc_kernel_size < 1 || dwc_kernel_size % 2 == 0))
      throw ContractError("ModelSpec: dwc_kernel_size must be odd");
    if (!(epsilon > 0)) throw ContractError("ModelSpec: epsilon must be > 0");
    head_spec().validate();
  }
};

// How each parameter is filled at init time.
enum class InitKind { projection, embedding, ones, zeros, dwc_taps };

struct ParamDef {
  std::string name;
  Shape shape;
  InitKind init;
};

// Full parameter inventory for a spec, in a fixed deterministic order.
std::vector<ParamDef> param_defs(const ModelSpec& spec);

// Named parameter map. std::map keeps iteration (and thus init, update and
// serialization order) deterministic.
using Params = std::map<std::string, Tensord>;

class ParamStore {
 public:
  ParamStore() = default;
  explicit ParamStore(Params initial) : params_(std::move(initial)) {}

  bool has(const std::string& name) const { return params_.count(name) > 0; }

  Tensord& at(const std::string& name) {
    auto it = params_.find(name);
    if (it == params_.end()) throw ContractError("ParamStore: unknown parameter '" + name + "'");
    return it->second;
  }
  const Tensord& at(const std::string& name) const {
    return const_cast<ParamStore*>(this)->at(name);
  }

  void add(const std::string& name, Tensord t) {
    if (!params_.emplace(name, std::move(t)).second)
      throw ContractError("ParamStore: duplicate parameter '" + name + "'");
  }

  const Params& all() const { return params_; }
  size_t size() const { return params_.size(); }

  std::int64_t scalar_count() const {
    std::int64_t n = 0;
    for (const auto& [k, v] : params_) n += v.numel();
    return n;
  }

  // Tracked copies of every parameter, registered as leaves on the tape.
  Params watch_all(Taped& tape) const {
    Params out;
    for (const auto& [k, v] : params_) out.emplace(k, tape.watch(v));
    return out;
  }

 private:
  Params params_;
};

class MarModel {
 public:
  MarModel(ModelSpec spec, std::uint64_t init_seed);
  MarModel(ModelSpec spec, ParamStore store);  // e.g. loaded from a checkpoint

  const ModelSpec& spec() const { return spec_; }
  ParamStore& store() { return store_; }
  const ParamStore& store() const { return store_; }

  // One condition vector per sequence position ({n_total, model_dim}).
  // known_tokens is the full {n_image, token_dim} buffer; rows whose mask
  // entry is false are never read. class_id may be spec().null_class() for
  // the unconditional pass.
  Tensord predict_conditions(const Params& p, const Tensord& known_tokens,
                             const std::vector<std::uint8_t>& known_mask, Index class_id) const;

  // One residual block; prefix identifies the parameter group
  // (e.g. "decoder.0."). Exposed for layer-level reduction tests.
  Tensord run_block(const Params& p, const std::string& prefix, const BlockConfig& block,
                    const Tensord& x) const;

  // Flow head parameter views pulled out of a param map.
  FlowHeadParams<double> head_params(const Params& p) const;

  // Decoder gate sets (direct views of the stored parameters).
  std::vector<GateSet<double>> decoder_gates() const;

 private:
  Tensord run_stack(const Params& p, const std::string& stack, Index layers, LayerRole role,
                    const Tensord& x) const;

  ModelSpec spec_;
  ParamStore store_;
};

}  // namespace linmar
