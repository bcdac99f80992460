#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "linmar/mar/model.hpp"

// Toy training loop: per step, draw a batch of (class, token grid) pairs,
// mask a random subset of each grid, predict conditions from the known part,
// and take one SGD-with-momentum step on the flow-matching loss over the
// masked positions. Every random draw flows from the single seed.

namespace linmar {

struct TrainConfig {
  Index steps = 2000;
  Index batch_size = 8;
  double lr = 0.05;
  double momentum = 0.9;
  double cond_drop_prob = 0.1;  // chance of training a batch element unconditionally
  double mask_ratio_min = 0.5;
  double mask_ratio_max = 1.0;

  void validate() const {
    if (steps < 1 || batch_size < 1) throw ConfigError("TrainConfig: steps and batch_size must be >= 1");
    if (lr < 0) throw ConfigError("TrainConfig: lr must be >= 0");
    if (momentum < 0 || momentum >= 1) throw ConfigError("TrainConfig: momentum must be in [0, 1)");
    if (cond_drop_prob < 0 || cond_drop_prob > 1)
      throw ConfigError("TrainConfig: cond_drop_prob must be in [0, 1]");
    if (mask_ratio_min <= 0 || mask_ratio_max > 1 || mask_ratio_min > mask_ratio_max)
      throw ConfigError("TrainConfig: mask ratio range must satisfy 0 < min <= max <= 1");
  }
};

struct ToyDataConfig {
  Index dataset_size = 256;
  double noise_std = 0.25;

  void validate() const {
    if (dataset_size < 1) throw ConfigError("ToyDataConfig: dataset_size must be >= 1");
    if (noise_std < 0) throw ConfigError("ToyDataConfig: noise_std must be >= 0");
  }
};

struct ToySample {
  Index class_id = 0;
  Tensord grid;  // {n_image, token_dim}
};

// Constant token every position of a class-c grid fluctuates around.
Tensord toy_class_target(const ModelSpec& spec, Index class_id);

// Class-balanced constant-plus-noise grids.
std::vector<ToySample> make_toy_dataset(const ModelSpec& spec, const ToyDataConfig& data,
                                        std::uint64_t seed);

struct TrainLog {
  std::vector<double> losses;  // one entry per step
};

TrainLog train_toy(MarModel& model, const std::vector<ToySample>& dataset, const TrainConfig& cfg,
                   std::uint64_t seed);

// Mean of the first/last `window` entries; the loss-halving checks compare
// these two.
double smoothed_head(const std::vector<double>& xs, size_t window);
double smoothed_tail(const std::vector<double>& xs, size_t window);

std::string loss_csv(const TrainLog& log);
void write_loss_csv(const TrainLog& log, const std::string& path);

}  // namespace linmar
