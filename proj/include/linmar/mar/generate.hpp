#pragma once

#include <cstdint>
#include <vector>

#include "linmar/mar/model.hpp"
#include "linmar/mar/schedule.hpp"

// Masked-set generation: walk a K-step schedule; at each step predict
// conditions from everything committed so far, sample every token of the
// step's set through the flow head, commit them, and only then mark them
// known. Each position is written exactly once (tracked and returned).

namespace linmar {

struct GenerateConfig {
  Index k_steps = 16;
  Index flow_steps = 25;
  double cfg_scale = 1.0;
  SizeCurve curve = SizeCurve::cosine;

  void validate() const {
    if (k_steps < 1) throw ConfigError("GenerateConfig: k_steps must be >= 1");
    if (flow_steps < 1) throw ConfigError("GenerateConfig: flow_steps must be >= 1");
  }
};

struct GenerationResult {
  Tensord tokens;                      // {n_image, token_dim}
  std::vector<int> write_counts;      // per image position; all must be 1
  MarSchedule schedule;
};

GenerationResult generate(const MarModel& model, Index class_id, const GenerateConfig& cfg,
                          std::uint64_t seed);

}  // namespace linmar
