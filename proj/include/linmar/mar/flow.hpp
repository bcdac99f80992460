#pragma once

#include <random>
#include <vector>

#include "linmar/ops.hpp"

// Per-token flow-matching head and its Euler sampler.
//
// Training draws t ~ U(0,1) and x0 ~ N(0,I), interpolates
// x_t = (1-t) x0 + t x1, and regresses the head's velocity prediction onto
// u = x1 - x0 with mean squared error. Sampling integrates
// x_{t+dt} = x_t + dt * v_hat from t=0 to t=1; with guidance,
// v_hat = v_u + cfg_scale * (v_c - v_u), and cfg_scale == 1 short-circuits to
// the single conditional pass (the algebraic reduction, kept exact).

namespace linmar {

struct FlowHeadSpec {
  Index cond_dim = 0;   // condition vector width
  Index token_dim = 0;  // token width (input x_t and output velocity)
  Index width = 128;    // hidden width
  Index depth = 3;      // number of linear layers

  Index input_dim() const { return cond_dim + token_dim + 1; }  // + time scalar

  void validate() const {
    if (cond_dim < 1 || token_dim < 1 || width < 1 || depth < 1)
      throw ContractError("FlowHeadSpec: all dimensions must be positive");
  }
};

// An MLP over [cond | x_t | t]: depth linear layers with silu between them.
template <class S>
struct FlowHeadParams {
  std::vector<Tensor<S>> w;  // depth matrices
  std::vector<Tensor<S>> b;  // depth row vectors

  void validate(const FlowHeadSpec& spec) const {
    spec.validate();
    if (static_cast<Index>(w.size()) != spec.depth || b.size() != w.size())
      throw ContractError("FlowHeadParams: expected " + std::to_string(spec.depth) + " layers");
    for (Index l = 0; l < spec.depth; ++l) {
      Index in = l == 0 ? spec.input_dim() : spec.width;
      Index out = l == spec.depth - 1 ? spec.token_dim : spec.width;
      if (w[l].shape != Shape{in, out})
        throw DimensionError("FlowHeadParams: layer " + std::to_string(l) + " weight " +
                             shape_str(w[l].shape) + ", expected " + shape_str({in, out}));
      if (b[l].shape != Shape{1, out})
        throw DimensionError("FlowHeadParams: layer " + std::to_string(l) + " bias " +
                             shape_str(b[l].shape) + ", expected " + shape_str({1, out}));
    }
  }
};

FlowHeadParams<double> flow_head_init(const FlowHeadSpec& spec, std::mt19937_64& rng);

// velocity = head(cond, x_t, t); all inputs batched over rows. t is {B, 1}.
template <class S>
Tensor<S> flow_head_forward(const FlowHeadSpec& spec, const FlowHeadParams<S>& params,
                            const Tensor<S>& cond, const Tensor<S>& x_t, const Tensor<S>& t) {
  params.validate(spec);
  Index batch = cond.rows();
  if (cond.rank() != 2 || cond.shape[1] != spec.cond_dim)
    throw DimensionError("flow_head_forward: cond " + shape_str(cond.shape));
  if (x_t.shape != Shape{batch, spec.token_dim})
    throw DimensionError("flow_head_forward: x_t " + shape_str(x_t.shape));
  if (t.shape != Shape{batch, 1})
    throw DimensionError("flow_head_forward: t " + shape_str(t.shape));
  Tensor<S> h = concat_cols<S>({cond, x_t, t});
  for (Index l = 0; l < spec.depth; ++l) {
    h = linear_layer(h, params.w[l], params.b[l]);
    if (l + 1 < spec.depth) h = silu(h);
  }
  return h;
}

// Single flow-matching regression loss over a batch of (condition, target
// token) pairs. Noise and times come from rng; cond may be tracked so the
// loss backpropagates into whatever produced the conditions.
Tensord flow_matching_loss(const FlowHeadSpec& spec, const FlowHeadParams<double>& params,
                           const Tensord& cond, const Tensord& x1, std::mt19937_64& rng);

// Euler integration from the given x0 (deterministic core).
Tensord sample_token_from(const FlowHeadSpec& spec, const FlowHeadParams<double>& params,
                          const Tensord& cond_c, const Tensord& cond_u, Index steps, double cfg_scale,
                          const Tensord& x0);

// Draws x0 ~ N(0, I) from the seed, then integrates.
Tensord sample_token(const FlowHeadSpec& spec, const FlowHeadParams<double>& params,
                     const Tensord& cond_c, const Tensord& cond_u, Index steps, double cfg_scale,
                     std::uint64_t seed);

}  // namespace linmar
