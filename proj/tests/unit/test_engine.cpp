#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <random>

#include "linmar/mar/checkpoint.hpp"
#include "linmar/mar/config.hpp"
#include "linmar/mar/generate.hpp"
#include "linmar/mar/train.hpp"
#include "test_utils.hpp"

using namespace linmar;
using test_util::bitwise_equal;
using test_util::randn;

namespace {
ModelSpec tiny_spec() {
  ModelSpec s;
  s.connector_layers = s.encoder_layers = s.decoder_layers = 1;
  s.model_dim = 16;
  s.n_heads = 2;
  s.layout = TokenLayout{2, 3, 3};
  s.token_dim = 2;
  s.kernel = Kernel::elu_plus_one;
  s.dwc_kernel_size = 3;
  s.head_width = 16;
  s.head_depth = 2;
  return s;
}
}  // namespace

TEST_CASE("config parser: comments, blanks, errors with line numbers") {
  KeyValueConfig cfg = KeyValueConfig::from_string(
      "# comment\n"
      "model_dim = 32\n"
      "\n"
      "lr = 0.5  # trailing comment\n"
      "kernel = relu\n",
      "test.cfg");
  CHECK(cfg.get_int("model_dim", 0) == 32);
  CHECK(cfg.get_double("lr", 0) == 0.5);
  CHECK(cfg.get_string("kernel", "") == "relu");

  CHECK_THROWS_WITH_AS(KeyValueConfig::from_string("novalue\n", "t.cfg"),
                       doctest::Contains("t.cfg:1"), ConfigError);
  CHECK_THROWS_AS(KeyValueConfig::from_string("a = 1\na = 2\n", "t.cfg"), ConfigError);
  CHECK_THROWS_AS(KeyValueConfig::from_string(" = 3\n", "t.cfg"), ConfigError);
}

TEST_CASE("config overrides replace values and malformed ones are rejected") {
  KeyValueConfig cfg = KeyValueConfig::from_string("steps = 10\n", "t.cfg");
  cfg.apply_override("steps=20");
  CHECK(cfg.get_int("steps", 0) == 20);
  CHECK_THROWS_AS(cfg.apply_override("nodelimiter"), ConfigError);
  CHECK_THROWS_AS(cfg.apply_override("=5"), ConfigError);
  cfg.apply_override("steps==5");  // value "=5" parses as a string...
  CHECK_THROWS_AS(cfg.get_int("steps", 0), ConfigError);  // ...but never as a number
}

TEST_CASE("typed getters validate numbers fully") {
  KeyValueConfig cfg = KeyValueConfig::from_string("a = 12x\nb = yes\nc = 1.5.2\n", "t.cfg");
  CHECK_THROWS_AS(cfg.get_int("a", 0), ConfigError);
  CHECK(cfg.get_bool("b", false) == true);
  CHECK_THROWS_AS(cfg.get_double("c", 0), ConfigError);
}

TEST_CASE("unknown keys are rejected once a config struct is built") {
  KeyValueConfig cfg = KeyValueConfig::from_string("model_dim = 32\nbanana = 1\n", "t.cfg");
  CHECK_THROWS_WITH_AS(engine_config_from(cfg), doctest::Contains("banana"), ConfigError);
}

TEST_CASE("config render round-trips through the parser") {
  KeyValueConfig cfg = KeyValueConfig::from_string("steps = 10\nlr = 0.5\n", "t.cfg");
  cfg.apply_override("steps=25");
  cfg.apply_override("batch_size=4");
  KeyValueConfig again = KeyValueConfig::from_string(cfg.render(), "rendered");
  CHECK(again.get_int("steps", 0) == 25);
  CHECK(again.get_double("lr", 0) == 0.5);
  CHECK(again.get_int("batch_size", 0) == 4);
}

TEST_CASE("engine config carries every section") {
  KeyValueConfig cfg = KeyValueConfig::from_string(
      "model_dim = 32\nn_heads = 4\ngrid_h = 4\ngrid_w = 4\nsteps = 5\nk_steps = 2\n"
      "gate_mode = kv_plus_z\ngate_sharing = head_shared\nschedule_curve = uniform\n",
      "t.cfg");
  EngineConfig ec = engine_config_from(cfg);
  CHECK(ec.model.model_dim == 32);
  CHECK(ec.model.gate_mode == GateMode::kv_plus_z);
  CHECK(ec.model.gate_sharing == GateSharing::head_shared);
  CHECK(ec.train.steps == 5);
  CHECK(ec.generate.k_steps == 2);
  CHECK(ec.generate.curve == SizeCurve::uniform);
}

TEST_CASE("gates and conv belong to the decoder only") {
  BlockConfig bad{LayerRole::encoder, GateMode::kv, false};
  CHECK_THROWS_AS(bad.validate(), ContractError);
  BlockConfig bad2{LayerRole::connector, GateMode::none, true};
  CHECK_THROWS_AS(bad2.validate(), ContractError);
  BlockConfig ok{LayerRole::decoder, GateMode::kv, true};
  ok.validate();
}

TEST_CASE("model init is seed-deterministic and store-validated") {
  ModelSpec spec = tiny_spec();
  MarModel a(spec, 7), b(spec, 7), c(spec, 8);
  bool same = true, diff = false;
  for (const auto& [name, t] : a.store().all()) {
    same = same && bitwise_equal(t, b.store().at(name));
    diff = diff || !bitwise_equal(t, c.store().at(name));
  }
  CHECK(same);
  CHECK(diff);

  ParamStore broken = a.store();
  broken.at("embed.mask") = Tensord::zeros({2, spec.model_dim});  // wrong shape
  CHECK_THROWS_AS(MarModel(spec, std::move(broken)), ContractError);
}

TEST_CASE("predict_conditions is deterministic and validates inputs") {
  ModelSpec spec = tiny_spec();
  MarModel model(spec, 3);
  std::mt19937_64 rng(61);
  Tensord grid = randn({spec.layout.n_image(), spec.token_dim}, rng);
  std::vector<std::uint8_t> known(static_cast<size_t>(spec.layout.n_image()), 0);
  known[0] = known[4] = 1;
  Params p = model.store().all();
  Tensord c1 = model.predict_conditions(p, grid, known, 0);
  Tensord c2 = model.predict_conditions(p, grid, known, 0);
  CHECK(bitwise_equal(c1, c2));
  CHECK(c1.shape == Shape{spec.layout.n_total(), spec.model_dim});

  Tensord u1 = model.predict_conditions(p, grid, known, spec.null_class());
  CHECK(!bitwise_equal(c1, u1));  // class embedding matters
  CHECK_THROWS_AS(model.predict_conditions(p, grid, known, spec.null_class() + 1), ContractError);
  std::vector<std::uint8_t> short_mask(3, 0);
  CHECK_THROWS_AS(model.predict_conditions(p, grid, short_mask, 0), DimensionError);
}

TEST_CASE("toy dataset is class-balanced around its targets") {
  ModelSpec spec = tiny_spec();
  ToyDataConfig data;
  data.dataset_size = 64;
  data.noise_std = 0.1;
  std::vector<ToySample> ds = make_toy_dataset(spec, data, 5);
  REQUIRE(ds.size() == 64);
  Index per_class[2] = {0, 0};
  for (const auto& s : ds) {
    per_class[s.class_id] += 1;
    double target = toy_class_target(spec, s.class_id).data[0];
    CHECK(std::fabs(s.grid.data.mean() - target) < 0.1);  // noise averages out
  }
  CHECK(per_class[0] == 32);
  CHECK(per_class[1] == 32);
  CHECK(toy_class_target(spec, 0).data[0] == 0.8);
  CHECK(toy_class_target(spec, 1).data[0] == -0.8);
  CHECK_THROWS_AS(toy_class_target(spec, 2), ContractError);
}

TEST_CASE("short training run halves the loss on the toy task") {
  ModelSpec spec = tiny_spec();
  MarModel model(spec, 11);
  ToyDataConfig data;
  data.dataset_size = 32;
  std::vector<ToySample> ds = make_toy_dataset(spec, data, 12);
  TrainConfig tc;
  tc.steps = 300;
  tc.batch_size = 4;
  tc.lr = 0.02;
  TrainLog log = train_toy(model, ds, tc, 13);
  REQUIRE(log.losses.size() == 300);
  double head = smoothed_head(log.losses, 10), tail = smoothed_tail(log.losses, 10);
  INFO("head ", head, " tail ", tail);
  CHECK(tail < 0.5 * head);
}

TEST_CASE("training is seed-deterministic and lr=0 freezes parameters bitwise") {
  ModelSpec spec = tiny_spec();
  ToyDataConfig data;
  data.dataset_size = 16;
  std::vector<ToySample> ds = make_toy_dataset(spec, data, 21);
  TrainConfig tc;
  tc.steps = 8;
  tc.batch_size = 2;

  MarModel m1(spec, 9), m2(spec, 9);
  TrainLog l1 = train_toy(m1, ds, tc, 33);
  TrainLog l2 = train_toy(m2, ds, tc, 33);
  CHECK(l1.losses == l2.losses);
  for (const auto& [name, t] : m1.store().all()) CHECK(bitwise_equal(t, m2.store().at(name)));

  MarModel frozen(spec, 9), reference(spec, 9);
  tc.lr = 0.0;
  train_toy(frozen, ds, tc, 33);
  for (const auto& [name, t] : frozen.store().all())
    CHECK(bitwise_equal(t, reference.store().at(name)));
}

TEST_CASE("training moves the decoder gates away from one") {
  ModelSpec spec = tiny_spec();
  MarModel model(spec, 17);
  ToyDataConfig data;
  data.dataset_size = 16;
  TrainConfig tc;
  tc.steps = 60;
  tc.batch_size = 2;
  tc.lr = 0.01;
  train_toy(model, make_toy_dataset(spec, data, 18), tc, 19);
  const Tensord& gk = model.store().at("decoder.0.gate.k");
  bool moved = false;
  for (Index i = 0; i < gk.numel(); ++i) moved = moved || gk.data[i] != 1.0;
  CHECK(moved);
}

TEST_CASE("checkpoints round-trip through float32 files") {
  namespace fs = std::filesystem;
  ModelSpec spec = tiny_spec();
  MarModel model(spec, 23);
  fs::path dir = fs::temp_directory_path() / "linmar_test_ckpt";
  fs::remove_all(dir);
  save_checkpoint(dir.string(), model.store(), "model_dim = 16\n");
  Checkpoint ck = load_checkpoint(dir.string());
  CHECK(ck.config_text == "model_dim = 16\n");
  CHECK(ck.store.size() == model.store().size());
  for (const auto& [name, t] : model.store().all()) {
    const Tensord& r = ck.store.at(name);
    REQUIRE(r.shape == t.shape);
    for (Index i = 0; i < t.numel(); ++i)
      CHECK(r.data[i] == static_cast<double>(static_cast<float>(t.data[i])));
  }
  // Reloading a second time is stable: float32 -> float64 -> float32 is exact.
  save_checkpoint((dir / "again").string(), ck.store, "model_dim = 16\n");
  Checkpoint ck2 = load_checkpoint((dir / "again").string());
  for (const auto& [name, t] : ck.store.all()) CHECK(bitwise_equal(t, ck2.store.at(name)));
  fs::remove_all(dir);
}

TEST_CASE("loading a missing or corrupt checkpoint fails with ArtifactError") {
  namespace fs = std::filesystem;
  CHECK_THROWS_AS(load_checkpoint("/nonexistent/checkpoint"), ArtifactError);
  fs::path dir = fs::temp_directory_path() / "linmar_bad_ckpt";
  fs::remove_all(dir);
  fs::create_directories(dir);
  {
    std::ofstream m(dir / "manifest.json");
    m << "{ not json";
  }
  CHECK_THROWS_AS(load_checkpoint(dir.string()), ArtifactError);
  fs::remove_all(dir);
}

TEST_CASE("generation commits sets in schedule order and stays finite") {
  ModelSpec spec = tiny_spec();
  MarModel model(spec, 29);
  GenerateConfig gc;
  gc.k_steps = 3;
  gc.flow_steps = 4;
  GenerationResult r = generate(model, 1, gc, 31);
  CHECK(r.tokens.shape == Shape{spec.layout.n_image(), spec.token_dim});
  CHECK(r.tokens.all_finite());
  CHECK(r.schedule.sets.size() == 3);
  for (int c : r.write_counts) CHECK(c == 1);
  CHECK_THROWS_AS(generate(model, spec.null_class() + 1, gc, 31), ContractError);
}
