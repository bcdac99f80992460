#include "linmar/mar/generate.hpp"

#include "linmar/mar/flow.hpp"

namespace linmar {

GenerationResult generate(const MarModel& model, Index class_id, const GenerateConfig& cfg,
                          std::uint64_t seed) {
  cfg.validate();
  const ModelSpec& spec = model.spec();
  if (class_id < 0 || class_id > spec.null_class())
    throw ContractError("generate: class_id " + std::to_string(class_id) + " out of range");

  Index n_img = spec.layout.n_image();
  std::mt19937_64 rng(seed);
  MarSchedule schedule = build_schedule(n_img, cfg.k_steps, rng(), cfg.curve);

  const Params& p = model.store().all();
  FlowHeadParams<double> head = model.head_params(p);
  FlowHeadSpec head_spec = spec.head_spec();
  bool guided = cfg.cfg_scale != 1.0;

  GenerationResult res;
  res.schedule = schedule;
  res.tokens = Tensord::zeros({n_img, spec.token_dim});
  res.write_counts.assign(static_cast<size_t>(n_img), 0);
  std::vector<std::uint8_t> known(static_cast<size_t>(n_img), 0);
  std::normal_distribution<double> unit(0.0, 1.0);

  for (const std::vector<Index>& set : schedule.sets) {
    Tensord conds = model.predict_conditions(p, res.tokens, known, class_id);
    Tensord cond_set = gather_rows(slice_rows(conds, spec.layout.n_query, n_img), set);
    Tensord cond_u_set = cond_set;
    if (guided) {
      // Guidance needs the unconditional pass; at cfg_scale == 1 the blend
      // reduces to the conditional velocity, so that pass is skipped whole.
      Tensord conds_u = model.predict_conditions(p, res.tokens, known, spec.null_class());
      cond_u_set = gather_rows(slice_rows(conds_u, spec.layout.n_query, n_img), set);
    }

    Index batch = static_cast<Index>(set.size());
    Tensord x0 = Tensord::zeros({batch, spec.token_dim});
    for (Index i = 0; i < x0.numel(); ++i) x0.data[i] = unit(rng);
    Tensord x = sample_token_from(head_spec, head, cond_set, cond_u_set, cfg.flow_steps,
                                  cfg.cfg_scale, x0);

    // Commit the whole set, then reveal it to later steps.
    for (Index r = 0; r < batch; ++r) {
      Index pos = set[static_cast<size_t>(r)];
      for (Index c = 0; c < spec.token_dim; ++c)
        res.tokens.data[pos * spec.token_dim + c] = x.data[r * spec.token_dim + c];
      ++res.write_counts[static_cast<size_t>(pos)];
    }
    for (Index pos : set) known[static_cast<size_t>(pos)] = 1;
  }
  return res;
}

}  // namespace linmar
