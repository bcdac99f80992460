#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "linmar/attention.hpp"
#include "linmar/cost.hpp"
#include "linmar/gating.hpp"
#include "linmar/mar/checkpoint.hpp"
#include "linmar/mar/config.hpp"
#include "linmar/mar/generate.hpp"
#include "linmar/mar/model.hpp"
#include "linmar/mar/train.hpp"
#include "linmar/verify.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitVerifyFail = 1;
constexpr int kExitConfig = 2;
constexpr int kExitArtifact = 3;

linmar::KeyValueConfig load_config(const std::string& path, const std::vector<std::string>& overrides) {
  linmar::KeyValueConfig cfg = path.empty() ? linmar::KeyValueConfig::from_string("", "<defaults>")
                                            : linmar::KeyValueConfig::from_file(path);
  for (const std::string& kv : overrides) cfg.apply_override(kv);
  return cfg;
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw linmar::ArtifactError("cannot open '" + path + "' for writing");
  out << text;
  if (!out) throw linmar::ArtifactError("short write to '" + path + "'");
}

int run_verify(const std::string& suite, bool mutate, std::uint64_t seed) {
  if (mutate) linmar::testing::set_mutation(linmar::testing::Mutation::sub_gamma_sign_flip);
  std::vector<linmar::CheckResult> results =
      suite.empty() ? linmar::run_all_verify_suites(seed) : linmar::run_verify_suite(suite, seed);
  int failures = 0;
  for (const auto& r : results) {
    std::printf("[%s] %s%s%s\n", r.pass ? "PASS" : "FAIL", r.name.c_str(),
                r.detail.empty() ? "" : " -- ", r.detail.c_str());
    if (!r.pass) ++failures;
  }
  if (failures > 0) {
    for (const auto& r : results)
      if (!r.pass) std::printf("FAILED: %s (seed %llu)\n", r.name.c_str(),
                               static_cast<unsigned long long>(seed));
    std::printf("%d of %zu checks failed\n", failures, results.size());
    return kExitVerifyFail;
  }
  std::printf("all %zu checks passed\n", results.size());
  return kExitOk;
}

linmar::CostConfig cost_config_from(const linmar::KeyValueConfig& cfg) {
  linmar::CostConfig c;
  c.n_query = cfg.get_int("n_query", 1024);
  c.n_image = cfg.get_int("n_image", 4096);
  c.model_dim = cfg.get_int("model_dim", 1536);
  c.n_heads = cfg.get_int("n_heads", 16);
  c.dwc_kernel = cfg.get_int("dwc_kernel", 5);
  c.include_projections = cfg.get_bool("include_projections", true);
  c.include_dwc = cfg.get_bool("include_dwc", true);
  c.include_gate = cfg.get_bool("include_gate", true);
  c.convention = linmar::flop_convention_from_string(
      cfg.get_string("flop_convention", "mac_as_one_flop"));
  if (cfg.has("N")) {  // convenience: total tokens, keeping the query count
    std::int64_t total = cfg.get_int("N", 0);
    if (total <= c.n_query)
      throw linmar::ConfigError("N must exceed n_query (" + std::to_string(c.n_query) + ")");
    c.n_image = total - c.n_query;
  }
  cfg.reject_unknown();
  c.validate();
  return c;
}

int run_flops(const std::string& config_path, const std::vector<std::string>& overrides,
              const std::string& out_path) {
  linmar::KeyValueConfig cfg = load_config(config_path, overrides);
  linmar::CostConfig c = cost_config_from(cfg);
  std::string json = linmar::cost_report_json(linmar::cost_report(c));
  if (out_path.empty())
    std::fputs(json.c_str(), stdout);
  else
    write_text(out_path, json);
  return kExitOk;
}

int run_train_toy(const std::string& config_path, const std::vector<std::string>& overrides,
                  std::uint64_t seed, const std::string& out_dir) {
  linmar::KeyValueConfig cfg = load_config(config_path, overrides);
  linmar::EngineConfig ec = linmar::engine_config_from(cfg);
  std::mt19937_64 root(seed);
  std::uint64_t init_seed = root(), data_seed = root(), train_seed = root();
  linmar::MarModel model(ec.model, init_seed);
  std::vector<linmar::ToySample> dataset = linmar::make_toy_dataset(ec.model, ec.data, data_seed);
  linmar::TrainLog log = linmar::train_toy(model, dataset, ec.train, train_seed);
  linmar::save_checkpoint(out_dir, model.store(), cfg.render());
  linmar::write_loss_csv(log, (std::filesystem::path(out_dir) / "loss.csv").string());
  size_t window = std::min<size_t>(50, log.losses.size());
  std::printf("trained %zu steps; smoothed loss %.6f -> %.6f; checkpoint at %s\n",
              log.losses.size(), linmar::smoothed_head(log.losses, window),
              linmar::smoothed_tail(log.losses, window), out_dir.c_str());
  return kExitOk;
}

// Little-endian float32 dump of sample-major token grids.
void write_tokens_f32(const std::string& path, const std::vector<linmar::Tensord>& grids) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw linmar::ArtifactError("cannot open '" + path + "' for writing");
  for (const linmar::Tensord& g : grids)
    for (linmar::Index i = 0; i < g.numel(); ++i) {
      float f = static_cast<float>(g.data[i]);
      std::uint32_t bits;
      std::memcpy(&bits, &f, sizeof(bits));
      char b[4] = {static_cast<char>(bits & 0xff), static_cast<char>((bits >> 8) & 0xff),
                   static_cast<char>((bits >> 16) & 0xff), static_cast<char>((bits >> 24) & 0xff)};
      out.write(b, 4);
    }
  if (!out) throw linmar::ArtifactError("short write to '" + path + "'");
}

int run_generate(const std::string& checkpoint_dir, const std::vector<std::string>& overrides,
                 std::uint64_t seed, const std::string& out_dir) {
  linmar::Checkpoint ckpt = linmar::load_checkpoint(checkpoint_dir);
  linmar::KeyValueConfig cfg = linmar::KeyValueConfig::from_string(ckpt.config_text, "<checkpoint>");
  for (const std::string& kv : overrides) cfg.apply_override(kv);
  linmar::EngineConfig ec = linmar::engine_config_from(cfg);
  linmar::MarModel model(ec.model, std::move(ckpt.store));

  std::filesystem::create_directories(out_dir);
  std::mt19937_64 root(seed);
  std::vector<linmar::Tensord> grids;
  std::vector<linmar::Index> classes;
  std::vector<double> class_mean_acc(static_cast<size_t>(ec.model.n_classes), 0.0);
  std::vector<linmar::Index> class_counts(static_cast<size_t>(ec.model.n_classes), 0);
  for (linmar::Index i = 0; i < ec.n_generate_samples; ++i) {
    linmar::Index cls = i % ec.model.n_classes;
    linmar::GenerationResult res = linmar::generate(model, cls, ec.generate, root());
    class_mean_acc[static_cast<size_t>(cls)] += res.tokens.data.mean();
    class_counts[static_cast<size_t>(cls)] += 1;
    classes.push_back(cls);
    grids.push_back(std::move(res.tokens));
  }
  write_tokens_f32((std::filesystem::path(out_dir) / "tokens.bin").string(), grids);

  nlohmann::ordered_json manifest;
  manifest["format"] = "linmar-tokens-v1";
  manifest["file"] = "tokens.bin";
  manifest["dtype"] = "float32";
  manifest["n_samples"] = ec.n_generate_samples;
  manifest["n_image"] = ec.model.layout.n_image();
  manifest["token_dim"] = ec.model.token_dim;
  manifest["classes"] = classes;
  manifest["seed"] = seed;
  write_text((std::filesystem::path(out_dir) / "manifest.json").string(), manifest.dump(2) + "\n");

  std::ostringstream summary;
  summary << "samples: " << ec.n_generate_samples << "\n";
  summary << "k_steps: " << ec.generate.k_steps << "  flow_steps: " << ec.generate.flow_steps
          << "  cfg_scale: " << ec.generate.cfg_scale << "\n";
  for (linmar::Index cls = 0; cls < ec.model.n_classes; ++cls) {
    double target = linmar::toy_class_target(ec.model, cls).data[0];
    double mean = class_counts[static_cast<size_t>(cls)] > 0
                      ? class_mean_acc[static_cast<size_t>(cls)] /
                            static_cast<double>(class_counts[static_cast<size_t>(cls)])
                      : 0.0;
    summary << "class " << cls << ": mean token " << mean << " (target " << target << ")\n";
  }
  std::string summary_text = summary.str();
  write_text((std::filesystem::path(out_dir) / "summary.txt").string(), summary_text);
  std::fputs(summary_text.c_str(), stdout);
  return kExitOk;
}

int run_export_gates(const std::string& checkpoint_dir, const std::string& config_path,
                     const std::vector<std::string>& overrides, std::uint64_t seed,
                     const std::string& out_path) {
  std::vector<linmar::GateSet<double>> gates;
  if (!checkpoint_dir.empty()) {
    linmar::Checkpoint ckpt = linmar::load_checkpoint(checkpoint_dir);
    linmar::KeyValueConfig cfg =
        linmar::KeyValueConfig::from_string(ckpt.config_text, "<checkpoint>");
    for (const std::string& kv : overrides) cfg.apply_override(kv);
    linmar::EngineConfig ec = linmar::engine_config_from(cfg);
    linmar::MarModel model(ec.model, std::move(ckpt.store));
    gates = model.decoder_gates();
  } else {
    linmar::KeyValueConfig cfg = load_config(config_path, overrides);
    linmar::EngineConfig ec = linmar::engine_config_from(cfg);
    linmar::MarModel model(ec.model, seed);  // fresh init: unit gates
    gates = model.decoder_gates();
  }
  std::string csv = linmar::format_gates_csv(gates);
  if (out_path.empty())
    std::fputs(csv.c_str(), stdout);
  else
    write_text(out_path, csv);
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"linear-attention verification and toy masked-generation toolkit"};
  app.require_subcommand(1);

  std::string suite, config_path, checkpoint_dir, out_path;
  std::vector<std::string> overrides;
  std::uint64_t seed = 0;
  bool mutate = false;

  CLI::App* verify = app.add_subcommand("verify", "run the oracle and invariant suites");
  verify->add_option("--suite", suite, "run one suite by name");
  verify->add_flag("--mutate", mutate, "inject the sign-flip mutation (suites must then fail)");
  verify->add_option("--seed", seed, "rng seed for randomized checks");

  CLI::App* flops = app.add_subcommand("flops", "emit the analytical cost report as JSON");
  flops->add_option("--config", config_path, "cost config file");
  flops->add_option("--override", overrides, "key=value override (repeatable)");
  flops->add_option("--out", out_path, "write JSON here instead of stdout");

  CLI::App* train = app.add_subcommand("train-toy", "train the toy generator and save a checkpoint");
  train->add_option("--config", config_path, "engine config file");
  train->add_option("--override", overrides, "key=value override (repeatable)");
  train->add_option("--seed", seed, "master seed for init, data, and training");
  train->add_option("--out", out_path, "checkpoint directory")->required();

  CLI::App* gen = app.add_subcommand("generate", "sample token grids from a checkpoint");
  gen->add_option("--checkpoint", checkpoint_dir, "checkpoint directory")->required();
  gen->add_option("--override", overrides, "key=value override (repeatable)");
  gen->add_option("--seed", seed, "master seed for sampling");
  gen->add_option("--out", out_path, "output directory")->required();

  CLI::App* gates = app.add_subcommand("export-gates", "write learned per-token gates as CSV");
  gates->add_option("--checkpoint", checkpoint_dir, "checkpoint directory");
  gates->add_option("--config", config_path, "engine config for a fresh model");
  gates->add_option("--override", overrides, "key=value override (repeatable)");
  gates->add_option("--seed", seed, "init seed when starting from a config");
  gates->add_option("--out", out_path, "write CSV here instead of stdout");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (app.got_subcommand(verify)) return run_verify(suite, mutate, seed);
    if (app.got_subcommand(flops)) return run_flops(config_path, overrides, out_path);
    if (app.got_subcommand(train)) return run_train_toy(config_path, overrides, seed, out_path);
    if (app.got_subcommand(gen)) return run_generate(checkpoint_dir, overrides, seed, out_path);
    if (app.got_subcommand(gates)) {
      if (checkpoint_dir.empty() && config_path.empty())
        throw linmar::ConfigError("export-gates needs --checkpoint or --config");
      return run_export_gates(checkpoint_dir, config_path, overrides, seed, out_path);
    }
  } catch (const linmar::ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kExitConfig;
  } catch (const linmar::ArtifactError& e) {
    std::fprintf(stderr, "artifact error: %s\n", e.what());
    return kExitArtifact;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitVerifyFail;
  }
  return kExitConfig;
}
