#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "linmar/attention.hpp"

// Learnable, data-independent per-token gates on the linear-attention memory.
// Division paradigm only; the normalizer keeps the gated weights normalized,
// which is what makes unconstrained (even negative) gates viable.
//
// Modes, all with A_ij = phi(Q_i) phi(K_j)^T and output num_i / den_i:
//   kv:        num = sum_j gk_j gv_j A_ij V_j   den = sum_j gk_j A_ij
//   k_only:    num = sum_j gk_j A_ij V_j        den = sum_j gk_j A_ij
//   v_only:    num = sum_j gv_j A_ij V_j        den = sum_j A_ij
//   kv_plus_z: num = sum_j gk_j gv_j A_ij V_j   den = sum_j gn_j A_ij
//
// Gates are plain parameters: initialized to 1, never clamped or normalized.

namespace linmar {

enum class GateMode { none, kv, k_only, v_only, kv_plus_z };
enum class GateSharing { head_wise, head_shared };

inline const char* to_string(GateMode m) {
  switch (m) {
    case GateMode::none: return "none";
    case GateMode::kv: return "kv";
    case GateMode::k_only: return "k_only";
    case GateMode::v_only: return "v_only";
    case GateMode::kv_plus_z: return "kv_plus_z";
  }
  return "?";
}

inline const char* to_string(GateSharing s) {
  return s == GateSharing::head_wise ? "head_wise" : "head_shared";
}

inline GateMode gate_mode_from_string(const std::string& s) {
  if (s == "none") return GateMode::none;
  if (s == "kv") return GateMode::kv;
  if (s == "k_only") return GateMode::k_only;
  if (s == "v_only") return GateMode::v_only;
  if (s == "kv_plus_z") return GateMode::kv_plus_z;
  throw ConfigError("unknown gate mode '" + s + "' (none|kv|k_only|v_only|kv_plus_z)");
}

inline GateSharing gate_sharing_from_string(const std::string& s) {
  if (s == "head_wise") return GateSharing::head_wise;
  if (s == "head_shared") return GateSharing::head_shared;
  throw ConfigError("unknown gate sharing '" + s + "' (head_wise|head_shared)");
}

inline bool gate_mode_has_gk(GateMode m) {
  return m == GateMode::kv || m == GateMode::k_only || m == GateMode::kv_plus_z;
}
inline bool gate_mode_has_gv(GateMode m) {
  return m == GateMode::kv || m == GateMode::v_only || m == GateMode::kv_plus_z;
}
inline bool gate_mode_has_gn(GateMode m) { return m == GateMode::kv_plus_z; }

template <class S>
struct GateSet {
  GateMode mode = GateMode::none;
  GateSharing sharing = GateSharing::head_wise;
  Index n_heads = 1;
  Index n_tokens = 0;
  // head_wise: {n_heads, n_tokens}; head_shared: {n_tokens}. Empty when the
  // mode does not use the gate.
  Tensor<S> g_k, g_v, g_n;

  void validate() const {
    if (mode == GateMode::none) return;
    if (n_heads < 1 || n_tokens < 1) throw ContractError("GateSet: bad n_heads/n_tokens");
    auto check = [&](const Tensor<S>& g, bool used, const char* name) {
      if (!used) {
        if (g.numel() != 0) throw ContractError(std::string("GateSet: ") + name + " set but unused by mode");
        return;
      }
      Shape want = sharing == GateSharing::head_wise ? Shape{n_heads, n_tokens} : Shape{n_tokens};
      if (g.shape != want)
        throw DimensionError(std::string("GateSet: ") + name + " is " + shape_str(g.shape) +
                             ", expected " + shape_str(want));
    };
    check(g_k, gate_mode_has_gk(mode), "g_k");
    check(g_v, gate_mode_has_gv(mode), "g_v");
    check(g_n, gate_mode_has_gn(mode), "g_n");
  }
};

// Fresh gates: every present gate starts at exactly 1 (identity behavior).
template <class S>
GateSet<S> gate_init(GateMode mode, GateSharing sharing, Index n_heads, Index n_tokens) {
  if (mode != GateMode::none && (n_heads < 1 || n_tokens < 1))
    throw ContractError("gate_init: bad n_heads/n_tokens");
  GateSet<S> g;
  g.mode = mode;
  g.sharing = sharing;
  g.n_heads = n_heads;
  g.n_tokens = n_tokens;
  Shape shape = sharing == GateSharing::head_wise ? Shape{n_heads, n_tokens} : Shape{n_tokens};
  if (gate_mode_has_gk(mode)) g.g_k = Tensor<S>::ones(shape);
  if (gate_mode_has_gv(mode)) g.g_v = Tensor<S>::ones(shape);
  if (gate_mode_has_gn(mode)) g.g_n = Tensor<S>::ones(shape);
  return g;
}

// The head's gate vector as a differentiable {N, 1} slice of the gate tensor.
template <class S>
Tensor<S> gate_head_column(const Tensor<S>& g, GateSharing sharing, Index head, Index n_tokens) {
  if (sharing == GateSharing::head_shared) return reshape(g, {n_tokens, 1});
  return transpose(slice_rows(g, head, 1));
}

// Gated linear attention for one head (division paradigm, linearized form).
// With mode none or all-ones gates this performs literally the same float
// operations as the ungated path, so outputs match bitwise.
template <class S>
AttentionOutput<S> gated_linear_attention(const Tensor<S>& q, const Tensor<S>& k, const Tensor<S>& v,
                                          const GateSet<S>& gates, const AttentionConfig& cfg,
                                          Index head = 0) {
  if (cfg.paradigm != Paradigm::division)
    throw ContractError("gated_linear_attention: gates are defined for the division paradigm only");
  if (gates.mode == GateMode::none) return linear_attention_div_linear(q, k, v, cfg);
  detail::check_qkv(q, k, v, "gated_linear_attention");
  gates.validate();
  if (gates.n_tokens != q.shape[0])
    throw DimensionError("gated_linear_attention: gates sized for N=" + std::to_string(gates.n_tokens) +
                         ", input has N=" + std::to_string(q.shape[0]));
  if (head < 0 || head >= gates.n_heads)
    throw ContractError("gated_linear_attention: head index out of range");

  Index n = q.shape[0];
  Tensor<S> phi_q = kernel_apply(q, cfg.kernel);
  Tensor<S> phi_k = kernel_apply(k, cfg.kernel);

  Tensor<S> kt = phi_k;
  if (gate_mode_has_gk(gates.mode))
    kt = rows_scale(phi_k, gate_head_column(gates.g_k, gates.sharing, head, n));
  Tensor<S> vt = v;
  if (gate_mode_has_gv(gates.mode))
    vt = rows_scale(v, gate_head_column(gates.g_v, gates.sharing, head, n));

  Tensor<S> m = matmul(transpose(kt), vt);
  // Normalizer source: gk-scaled keys for kv/k_only, raw keys for v_only,
  // the dedicated gn gate for kv_plus_z.
  Tensor<S> z_src = gates.mode == GateMode::kv_plus_z
                        ? rows_scale(phi_k, gate_head_column(gates.g_n, gates.sharing, head, n))
                        : (gate_mode_has_gk(gates.mode) ? kt : phi_k);
  Tensor<S> z = transpose(col_sums(z_src));
  Tensor<S> num = matmul(phi_q, m);
  Tensor<S> den = detail::guard_normalizer(matmul(phi_q, z), cfg, "gated_linear_attention");
  return {rows_div(num, den), std::nullopt};
}

// Learnable scalar count across the decoder stack.
inline std::int64_t gate_param_count(GateMode mode, GateSharing sharing, std::int64_t n_heads,
                                     std::int64_t n_tokens, std::int64_t n_decoder_layers) {
  if (n_heads < 1 || n_tokens < 0 || n_decoder_layers < 0)
    throw ContractError("gate_param_count: bad arguments");
  std::int64_t per_token = 0;
  switch (mode) {
    case GateMode::none: per_token = 0; break;
    case GateMode::kv: per_token = 2; break;
    case GateMode::k_only: per_token = 1; break;
    case GateMode::v_only: per_token = 1; break;
    case GateMode::kv_plus_z: per_token = 3; break;
  }
  std::int64_t heads = sharing == GateSharing::head_wise ? n_heads : 1;
  return per_token * heads * n_tokens * n_decoder_layers;
}

// CSV round-trip for trained gates (implemented in gating_io.cpp).
struct GateCsvRow {
  Index layer = 0;
  Index head = 0;
  Index token_index = 0;
  double g_k = 1.0;
  double g_v = 1.0;
  double g_n = 1.0;
  bool has_g_n = false;
};

std::string format_gates_csv(const std::vector<GateSet<double>>& decoder_layers);
void export_gates_csv(const std::vector<GateSet<double>>& decoder_layers, const std::string& path);
std::vector<GateCsvRow> parse_gates_csv(const std::string& text);

}  // namespace linmar
