#include "linmar/mar/train.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>

namespace linmar {

Tensord toy_class_target(const ModelSpec& spec, Index class_id) {
  if (class_id < 0 || class_id >= spec.n_classes)
    throw ContractError("toy_class_target: class_id " + std::to_string(class_id) + " out of [0, " +
                        std::to_string(spec.n_classes) + ")");
  // Classes sit at distinct constants spread over [-0.8, 0.8]; two classes
  // land at +/-0.8, which any trained sampler must separate cleanly.
  double denom = std::max<Index>(1, spec.n_classes - 1);
  double mu = 0.8 * std::cos(M_PI * static_cast<double>(class_id) / denom);
  return Tensord::full({1, spec.token_dim}, mu);
}

std::vector<ToySample> make_toy_dataset(const ModelSpec& spec, const ToyDataConfig& data,
                                        std::uint64_t seed) {
  spec.validate();
  data.validate();
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> unit(0.0, 1.0);
  std::vector<ToySample> out;
  out.reserve(static_cast<size_t>(data.dataset_size));
  for (Index i = 0; i < data.dataset_size; ++i) {
    ToySample s;
    s.class_id = i % spec.n_classes;
    double mu = toy_class_target(spec, s.class_id).data[0];
    s.grid = Tensord::zeros({spec.layout.n_image(), spec.token_dim});
    for (Index j = 0; j < s.grid.numel(); ++j) s.grid.data[j] = mu + data.noise_std * unit(rng);
    out.push_back(std::move(s));
  }
  return out;
}

TrainLog train_toy(MarModel& model, const std::vector<ToySample>& dataset, const TrainConfig& cfg,
                   std::uint64_t seed) {
  cfg.validate();
  if (dataset.empty()) throw ContractError("train_toy: empty dataset");
  const ModelSpec& spec = model.spec();
  Index n_img = spec.layout.n_image();

  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<size_t> pick(0, dataset.size() - 1);
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  std::uniform_real_distribution<double> ratio(cfg.mask_ratio_min, cfg.mask_ratio_max);

  std::map<std::string, Tensord::Storage> velocity;
  for (const auto& [name, t] : model.store().all())
    velocity.emplace(name, Tensord::Storage::Zero(t.numel()));

  TrainLog log;
  std::vector<Index> perm(static_cast<size_t>(n_img));
  for (Index step = 0; step < cfg.steps; ++step) {
    Taped tape;
    Params p = model.store().watch_all(tape);
    FlowHeadParams<double> head = model.head_params(p);

    Tensord total;
    for (Index b = 0; b < cfg.batch_size; ++b) {
      const ToySample& sample = dataset[pick(rng)];

      double r = ratio(rng);
      Index n_masked = std::clamp<Index>(static_cast<Index>(std::llround(r * n_img)), 1, n_img);
      std::iota(perm.begin(), perm.end(), Index{0});
      std::shuffle(perm.begin(), perm.end(), rng);
      std::vector<Index> masked(perm.begin(), perm.begin() + n_masked);
      std::sort(masked.begin(), masked.end());
      std::vector<std::uint8_t> known(static_cast<size_t>(n_img), 1);
      for (Index m : masked) known[static_cast<size_t>(m)] = 0;

      Index cls = uni(rng) < cfg.cond_drop_prob ? spec.null_class() : sample.class_id;

      Tensord conds = model.predict_conditions(p, sample.grid, known, cls);
      Tensord img_conds = slice_rows(conds, spec.layout.n_query, n_img);
      Tensord cond_masked = gather_rows(img_conds, masked);
      Tensord x1 = gather_rows(sample.grid, masked);
      Tensord loss_b = flow_matching_loss(spec.head_spec(), head, cond_masked, x1, rng);
      total = b == 0 ? loss_b : add(total, loss_b);
    }
    total = scale(total, 1.0 / static_cast<double>(cfg.batch_size));

    double loss_val = total.value();
    if (!std::isfinite(loss_val))
      throw TrainingError("train_toy: non-finite loss at step " + std::to_string(step));
    log.losses.push_back(loss_val);

    tape.backward(total);
    for (auto& [name, t] : p) {
      Tensord g = tape.grad(t);
      if (!g.all_finite())
        throw TrainingError("train_toy: non-finite gradient for '" + name + "' at step " +
                            std::to_string(step));
      Tensord::Storage& v = velocity.at(name);
      v = cfg.momentum * v + g.data;
      model.store().at(name).data -= cfg.lr * v;
    }
  }
  return log;
}

double smoothed_head(const std::vector<double>& xs, size_t window) {
  if (xs.empty()) throw ContractError("smoothed_head: empty series");
  size_t w = std::min(window == 0 ? size_t{1} : window, xs.size());
  return std::accumulate(xs.begin(), xs.begin() + w, 0.0) / static_cast<double>(w);
}

double smoothed_tail(const std::vector<double>& xs, size_t window) {
  if (xs.empty()) throw ContractError("smoothed_tail: empty series");
  size_t w = std::min(window == 0 ? size_t{1} : window, xs.size());
  return std::accumulate(xs.end() - w, xs.end(), 0.0) / static_cast<double>(w);
}

std::string loss_csv(const TrainLog& log) {
  std::string out = "step,loss\n";
  char buf[48];
  for (size_t i = 0; i < log.losses.size(); ++i) {
    std::snprintf(buf, sizeof(buf), "%zu,%.17g\n", i, log.losses[i]);
    out += buf;
  }
  return out;
}

void write_loss_csv(const TrainLog& log, const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw ArtifactError("write_loss_csv: cannot open '" + path + "'");
  f << loss_csv(log);
  if (!f) throw ArtifactError("write_loss_csv: write to '" + path + "' failed");
}

}  // namespace linmar
