#include "linmar/mar/flow.hpp"

#include <cmath>

namespace linmar {

namespace {

Tensord randn(Shape s, std::mt19937_64& rng) {
  std::normal_distribution<double> unit(0.0, 1.0);
  Tensord t = Tensord::zeros(std::move(s));
  for (Index i = 0; i < t.numel(); ++i) t.data[i] = unit(rng);
  return t;
}

}  // namespace

FlowHeadParams<double> flow_head_init(const FlowHeadSpec& spec, std::mt19937_64& rng) {
  spec.validate();
  FlowHeadParams<double> p;
  std::normal_distribution<double> unit(0.0, 1.0);
  for (Index l = 0; l < spec.depth; ++l) {
    Index in = l == 0 ? spec.input_dim() : spec.width;
    Index out = l == spec.depth - 1 ? spec.token_dim : spec.width;
    Tensord w = Tensord::zeros({in, out});
    double sd = 1.0 / std::sqrt(static_cast<double>(in));
    for (Index i = 0; i < w.numel(); ++i) w.data[i] = sd * unit(rng);
    p.w.push_back(std::move(w));
    p.b.push_back(Tensord::zeros({1, out}));
  }
  p.validate(spec);
  return p;
}

Tensord flow_matching_loss(const FlowHeadSpec& spec, const FlowHeadParams<double>& params,
                           const Tensord& cond, const Tensord& x1, std::mt19937_64& rng) {
  params.validate(spec);
  Index batch = cond.rows();
  if (x1.shape != Shape{batch, spec.token_dim})
    throw DimensionError("flow_matching_loss: x1 " + shape_str(x1.shape));

  std::uniform_real_distribution<double> uni(0.0, 1.0);
  Tensord t = Tensord::zeros({batch, 1});
  for (Index i = 0; i < batch; ++i) t.data[i] = uni(rng);
  Tensord one_minus_t = Tensord::zeros({batch, 1});
  for (Index i = 0; i < batch; ++i) one_minus_t.data[i] = 1.0 - t.data[i];
  Tensord x0 = randn({batch, spec.token_dim}, rng);

  Tensord x_t = add(rows_scale(x0, one_minus_t), rows_scale(x1, t));
  Tensord target = sub(x1, x0);  // constant velocity of the straight path
  Tensord v_hat = flow_head_forward(spec, params, cond, x_t, t);
  return mse(v_hat, target);
}

Tensord sample_token_from(const FlowHeadSpec& spec, const FlowHeadParams<double>& params,
                          const Tensord& cond_c, const Tensord& cond_u, Index steps, double cfg_scale,
                          const Tensord& x0) {
  params.validate(spec);
  if (steps < 1) throw ContractError("sample_token_from: steps must be >= 1");
  Index batch = cond_c.rows();
  if (x0.shape != Shape{batch, spec.token_dim})
    throw DimensionError("sample_token_from: x0 " + shape_str(x0.shape));
  bool guided = cfg_scale != 1.0;
  if (guided && cond_u.shape != cond_c.shape)
    throw DimensionError("sample_token_from: cond_u " + shape_str(cond_u.shape) + " vs cond_c " +
                         shape_str(cond_c.shape));

  double dt = 1.0 / static_cast<double>(steps);
  Tensord x = x0;
  for (Index s = 0; s < steps; ++s) {
    Tensord t = Tensord::full({batch, 1}, static_cast<double>(s) / static_cast<double>(steps));
    Tensord v = flow_head_forward(spec, params, cond_c, x, t);
    if (guided) {
      // v_u + cfg (v_c - v_u); at cfg == 1 this reduces to v_c exactly, so
      // that branch above never evaluates the unconditional pass at all.
      Tensord v_u = flow_head_forward(spec, params, cond_u, x, t);
      v = add(v_u, scale(sub(v, v_u), cfg_scale));
    }
    x = add(x, scale(v, dt));
  }
  return x;
}

Tensord sample_token(const FlowHeadSpec& spec, const FlowHeadParams<double>& params,
                     const Tensord& cond_c, const Tensord& cond_u, Index steps, double cfg_scale,
                     std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  Tensord x0 = randn({cond_c.rows(), spec.token_dim}, rng);
  return sample_token_from(spec, params, cond_c, cond_u, steps, cfg_scale, x0);
}

}  // namespace linmar
