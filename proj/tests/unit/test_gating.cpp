#include <doctest.h>

#include <random>

#include "linmar/gating.hpp"
#include "test_utils.hpp"

using namespace linmar;
using test_util::randn;

TEST_CASE("gate parameter counts per mode") {
  // factor x heads x tokens x layers
  CHECK(gate_param_count(GateMode::kv, GateSharing::head_wise, 12, 320, 16) == 122880);
  CHECK(gate_param_count(GateMode::k_only, GateSharing::head_wise, 12, 320, 16) == 61440);
  CHECK(gate_param_count(GateMode::v_only, GateSharing::head_wise, 12, 320, 16) == 61440);
  CHECK(gate_param_count(GateMode::kv_plus_z, GateSharing::head_wise, 12, 320, 16) == 184320);
  CHECK(gate_param_count(GateMode::none, GateSharing::head_wise, 12, 320, 16) == 0);
  CHECK(gate_param_count(GateMode::kv, GateSharing::head_shared, 16, 320, 16) == 10240);
}

TEST_CASE("gate_init shapes follow mode and sharing") {
  GateSet<double> hw = gate_init<double>(GateMode::kv_plus_z, GateSharing::head_wise, 3, 7);
  CHECK(hw.g_k.shape == Shape{3, 7});
  CHECK(hw.g_v.shape == Shape{3, 7});
  CHECK(hw.g_n.shape == Shape{3, 7});
  for (Index i = 0; i < hw.g_k.numel(); ++i) CHECK(hw.g_k.data[i] == 1.0);

  GateSet<double> hs = gate_init<double>(GateMode::v_only, GateSharing::head_shared, 3, 7);
  CHECK(hs.g_k.numel() == 0);
  CHECK(hs.g_v.shape == Shape{7});
  CHECK(hs.g_n.numel() == 0);
}

TEST_CASE("gates csv lists layer, head, token rows and round-trips") {
  std::vector<GateSet<double>> layers;
  layers.push_back(gate_init<double>(GateMode::kv, GateSharing::head_wise, 2, 4));
  layers.push_back(gate_init<double>(GateMode::kv, GateSharing::head_wise, 2, 4));
  layers[0].g_k.at(0, 2) = -0.375;  // negative values survive export untouched
  layers[1].g_v.at(1, 3) = 2.5;

  std::string csv = format_gates_csv(layers);
  std::vector<GateCsvRow> rows = parse_gates_csv(csv);
  CHECK(rows.size() == 16);  // 2 layers x 2 heads x 4 tokens
  CHECK(csv.substr(0, csv.find('\n')) == "layer,head,token_index,g_k,g_v");

  bool found_neg = false, found_big = false;
  for (const auto& r : rows) {
    if (r.layer == 0 && r.head == 0 && r.token_index == 2) {
      CHECK(r.g_k == -0.375);
      found_neg = true;
    }
    if (r.layer == 1 && r.head == 1 && r.token_index == 3) {
      CHECK(r.g_v == 2.5);
      found_big = true;
    }
  }
  CHECK(found_neg);
  CHECK(found_big);
}

TEST_CASE("gates csv grows a g_n column only for the z-gated mode") {
  std::vector<GateSet<double>> layers;
  layers.push_back(gate_init<double>(GateMode::kv_plus_z, GateSharing::head_shared, 2, 3));
  std::string csv = format_gates_csv(layers);
  CHECK(csv.substr(0, csv.find('\n')) == "layer,head,token_index,g_k,g_v,g_n");
  std::vector<GateCsvRow> rows = parse_gates_csv(csv);
  CHECK(rows.size() == 6);  // head_shared still lists every head explicitly
  for (const auto& r : rows) CHECK(r.g_n == 1.0);
}

TEST_CASE("ungated layers are skipped but keep their indices") {
  std::vector<GateSet<double>> layers;
  layers.push_back(gate_init<double>(GateMode::none, GateSharing::head_wise, 1, 2));
  layers.push_back(gate_init<double>(GateMode::v_only, GateSharing::head_wise, 1, 2));
  std::vector<GateCsvRow> rows = parse_gates_csv(format_gates_csv(layers));
  CHECK(rows.size() == 2);
  for (const auto& r : rows) {
    CHECK(r.layer == 1);
    CHECK(r.g_k == 1.0);  // absent gates export as the identity
  }
}

TEST_CASE("malformed gates csv is rejected with its line number") {
  CHECK_THROWS_AS(parse_gates_csv("bogus header\n"), ConfigError);
  CHECK_THROWS_AS(parse_gates_csv("layer,head,token_index,g_k,g_v\n0,0,zero,1,1\n"), ConfigError);
  CHECK_THROWS_AS(parse_gates_csv("layer,head,token_index,g_k,g_v\n0,0,0,1\n"), ConfigError);
}

TEST_CASE("csv export preserves full double precision") {
  std::vector<GateSet<double>> layers;
  layers.push_back(gate_init<double>(GateMode::kv, GateSharing::head_shared, 1, 1));
  layers[0].g_k.data[0] = 0.1234567890123456789;  // rounds to nearest double
  std::vector<GateCsvRow> rows = parse_gates_csv(format_gates_csv(layers));
  CHECK(rows[0].g_k == layers[0].g_k.data[0]);
}

TEST_CASE("gated attention on the tape trains gates without clamping them") {
  std::mt19937_64 rng(31);
  Index n = 6, d = 4;
  AttentionConfig cfg;
  cfg.n_tokens = n;
  cfg.model_dim = d;
  cfg.kernel = Kernel::elu_plus_one;
  Tensord q = randn({n, d}, rng), k = randn({n, d}, rng), v = randn({n, d}, rng);
  GateSet<double> gates = gate_init<double>(GateMode::kv, GateSharing::head_wise, 1, n);
  Tensord target = randn({n, d}, rng);

  // Aggressive steps push some gate negative; the library must keep it.
  for (int step = 0; step < 200; ++step) {
    Taped tape;
    GateSet<double> tg = gates;
    tg.g_k = tape.watch(gates.g_k);
    tg.g_v = tape.watch(gates.g_v);
    tape.backward(mse(gated_linear_attention(q, k, v, tg, cfg, 0).output, target));
    gates.g_k.data -= 2.0 * tape.grad(tg.g_k).data;
    gates.g_v.data -= 2.0 * tape.grad(tg.g_v).data;
  }
  CHECK(gates.g_k.all_finite());
  CHECK(gates.g_v.all_finite());
  double minv = std::min(gates.g_k.data.minCoeff(), gates.g_v.data.minCoeff());
  INFO("min trained gate value ", minv);
  bool moved = false;
  for (Index i = 0; i < gates.g_k.numel(); ++i) moved = moved || gates.g_k.data[i] != 1.0;
  CHECK(moved);
}
