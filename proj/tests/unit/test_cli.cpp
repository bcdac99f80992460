#include <doctest.h>

#include <sys/wait.h>

#include <array>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

// Exercises the installed binary end to end. The binary path and a scratch
// directory come in through environment variables set by ctest.

namespace {

namespace fs = std::filesystem;

std::string cli_path() {
  const char* p = std::getenv("LINMAR_CLI");
  REQUIRE_MESSAGE(p != nullptr, "LINMAR_CLI must point at the built binary");
  return p;
}

std::string config_dir() {
  const char* p = std::getenv("LINMAR_CONFIGS");
  REQUIRE_MESSAGE(p != nullptr, "LINMAR_CONFIGS must point at the configs directory");
  return p;
}

fs::path scratch() {
  fs::path dir = fs::temp_directory_path() / "linmar_cli_test";
  fs::create_directories(dir);
  return dir;
}

struct RunResult {
  int exit_code = -1;
  std::string output;  // stdout + stderr
};

RunResult run(const std::string& args) {
  std::string cmd = cli_path() + " " + args + " 2>&1";
  FILE* pipe = popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  RunResult r;
  std::array<char, 4096> buf;
  size_t n;
  while ((n = fread(buf.data(), 1, buf.size(), pipe)) > 0) r.output.append(buf.data(), n);
  int status = pclose(pipe);
  r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

}  // namespace

TEST_CASE("help exits zero; unknown verbs exit with a config error") {
  CHECK(run("--help").exit_code == 0);
  RunResult bad = run("frobnicate");
  CHECK(bad.exit_code == 2);
  RunResult none = run("");
  CHECK(none.exit_code == 2);
}

TEST_CASE("verify: single fast suite passes, unknown suite is a config error") {
  RunResult ok = run("verify --suite softmax_example");
  CHECK(ok.exit_code == 0);
  CHECK(ok.output.find("[PASS]") != std::string::npos);
  CHECK(run("verify --suite no_such_suite").exit_code == 2);
}

TEST_CASE("verify: injected mutation makes the equivalence suite fail with the seed named") {
  RunResult r = run("verify --suite equivalence --mutate --seed 5");
  CHECK(r.exit_code == 1);
  CHECK(r.output.find("[FAIL]") != std::string::npos);
  CHECK(r.output.find("seed 5") != std::string::npos);
}

TEST_CASE("flops: defaults reproduce the headline JSON and overrides reshape it") {
  RunResult base = run("flops");
  CHECK(base.exit_code == 0);
  CHECK(base.output.find("\"softmax_attention\": 128849018880") != std::string::npos);
  CHECK(base.output.find("\"linear_attention\": 49998200832") != std::string::npos);

  RunResult conf = run("flops --config " + config_dir() + "/headline.cfg");
  CHECK(conf.exit_code == 0);
  CHECK(conf.output == base.output);

  RunResult smaller = run("flops --override N=2048");
  CHECK(smaller.exit_code == 0);
  CHECK(smaller.output.find("\"n_tokens\": 2048") != std::string::npos);

  CHECK(run("flops --override key==value").exit_code == 2);
  CHECK(run("flops --override banana=1").exit_code == 2);
  CHECK(run("flops --override n_heads=7").exit_code == 2);  // 1536 % 7 != 0
  CHECK(run("flops --config /nonexistent.cfg").exit_code == 3);
}

TEST_CASE("flops: --out writes the same bytes as stdout") {
  fs::path out = scratch() / "report.json";
  fs::remove(out);
  RunResult direct = run("flops");
  RunResult filed = run("flops --out " + out.string());
  CHECK(filed.exit_code == 0);
  CHECK(slurp(out) == direct.output);
}

TEST_CASE("train-toy then generate then export-gates, deterministically") {
  fs::path dir = scratch();
  fs::path ck1 = dir / "ck1", ck2 = dir / "ck2", gen = dir / "gen";
  fs::remove_all(ck1);
  fs::remove_all(ck2);
  fs::remove_all(gen);
  std::string base = "train-toy --config " + config_dir() +
                     "/toy.cfg --override steps=60 --override batch_size=2 --seed 7 --out ";

  CHECK(run(base + ck1.string()).exit_code == 0);
  CHECK(run(base + ck2.string()).exit_code == 0);
  CHECK(slurp(ck1 / "loss.csv") == slurp(ck2 / "loss.csv"));  // same seed, same trace
  std::string csv = slurp(ck1 / "loss.csv");
  CHECK(csv.substr(0, 10) == "step,loss\n");

  RunResult g = run("generate --checkpoint " + ck1.string() +
                    " --override n_generate_samples=2 --override k_steps=4"
                    " --override flow_steps=5 --seed 3 --out " +
                    gen.string());
  CHECK(g.exit_code == 0);
  CHECK(fs::exists(gen / "tokens.bin"));
  CHECK(fs::exists(gen / "manifest.json"));
  CHECK(fs::exists(gen / "summary.txt"));
  // 2 samples x 64 image tokens x token_dim 4 x 4 bytes
  CHECK(fs::file_size(gen / "tokens.bin") == 2ull * 64 * 4 * 4);

  RunResult gates = run("export-gates --checkpoint " + ck1.string());
  CHECK(gates.exit_code == 0);
  CHECK(gates.output.find("layer,head,token_index,g_k,g_v") == 0);
  // Sixty training steps must have moved at least one gate off exactly 1.
  bool moved = false;
  std::istringstream lines(gates.output);
  std::string line;
  std::getline(lines, line);  // header
  while (std::getline(lines, line))
    if (line.size() > 0 && line.find(",1,1") == std::string::npos) moved = true;
  CHECK(moved);
}

TEST_CASE("export-gates on a fresh model prints all-ones gates") {
  RunResult r = run("export-gates --config " + config_dir() + "/toy.cfg");
  CHECK(r.exit_code == 0);
  std::istringstream lines(r.output);
  std::string line;
  std::getline(lines, line);
  CHECK(line == "layer,head,token_index,g_k,g_v");
  size_t rows = 0;
  while (std::getline(lines, line)) {
    if (line.empty()) continue;
    ++rows;
    size_t third = line.find(',', line.find(',', line.find(',') + 1) + 1);
    CHECK(line.substr(third + 1) == "1,1");
  }
  CHECK(rows == 2ull * 4 * 68);  // layers x heads x tokens
}

TEST_CASE("generate without a checkpoint is an artifact error") {
  CHECK(run("generate --checkpoint /nonexistent_ckpt --out /tmp/x").exit_code == 3);
}

TEST_CASE("train-toy rejects bad config values as config errors") {
  fs::path dir = scratch() / "never";
  std::string base = "train-toy --config " + config_dir() + "/toy.cfg --out " + dir.string();
  CHECK(run(base + " --override momentum=1.5").exit_code == 2);
  CHECK(run(base + " --override mask_ratio_min=0").exit_code == 2);
  CHECK(run(base + " --override steps=zero").exit_code == 2);
  CHECK(run(base + " --override banana=1").exit_code == 2);
}
