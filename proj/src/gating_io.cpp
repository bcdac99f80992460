#include <cstdio>
#include <fstream>
#include <sstream>

#include "linmar/gating.hpp"

namespace linmar {

namespace {

// Shortest representation that round-trips a double exactly.
std::string fmt_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

double gate_value(const GateSet<double>& g, const Tensor<double>& t, Index head, Index tok) {
  if (t.numel() == 0) return 1.0;  // absent gate acts as identity
  if (g.sharing == GateSharing::head_shared) return t.data[tok];
  return t.data[head * g.n_tokens + tok];
}

}  // namespace

std::string format_gates_csv(const std::vector<GateSet<double>>& decoder_layers) {
  bool any_gn = false;
  for (const auto& g : decoder_layers)
    if (gate_mode_has_gn(g.mode)) any_gn = true;

  std::ostringstream os;
  os << "layer,head,token_index,g_k,g_v";
  if (any_gn) os << ",g_n";
  os << "\n";
  for (size_t layer = 0; layer < decoder_layers.size(); ++layer) {
    const GateSet<double>& g = decoder_layers[layer];
    if (g.mode == GateMode::none) continue;
    g.validate();
    for (Index head = 0; head < g.n_heads; ++head) {
      for (Index tok = 0; tok < g.n_tokens; ++tok) {
        os << layer << "," << head << "," << tok << "," << fmt_double(gate_value(g, g.g_k, head, tok))
           << "," << fmt_double(gate_value(g, g.g_v, head, tok));
        if (any_gn) os << "," << fmt_double(gate_value(g, g.g_n, head, tok));
        os << "\n";
      }
    }
  }
  return os.str();
}

void export_gates_csv(const std::vector<GateSet<double>>& decoder_layers, const std::string& path) {
  std::ofstream f(path, std::ios::binary);  // binary: keep '\n' endings everywhere
  if (!f) throw ArtifactError("export_gates_csv: cannot open '" + path + "' for writing");
  f << format_gates_csv(decoder_layers);
  if (!f) throw ArtifactError("export_gates_csv: write to '" + path + "' failed");
}

std::vector<GateCsvRow> parse_gates_csv(const std::string& text) {
  std::istringstream is(text);
  std::string line;
  if (!std::getline(is, line)) throw ConfigError("gates csv: empty input");
  bool has_gn = false;
  if (line == "layer,head,token_index,g_k,g_v,g_n")
    has_gn = true;
  else if (line != "layer,head,token_index,g_k,g_v")
    throw ConfigError("gates csv: unexpected header '" + line + "'");

  std::vector<GateCsvRow> rows;
  size_t lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string field;
    std::vector<std::string> fields;
    while (std::getline(ls, field, ',')) fields.push_back(field);
    if (fields.size() != (has_gn ? 6u : 5u))
      throw ConfigError("gates csv line " + std::to_string(lineno) + ": expected " +
                        std::to_string(has_gn ? 6 : 5) + " fields, got " + std::to_string(fields.size()));
    GateCsvRow r;
    try {
      r.layer = std::stoll(fields[0]);
      r.head = std::stoll(fields[1]);
      r.token_index = std::stoll(fields[2]);
      r.g_k = std::stod(fields[3]);
      r.g_v = std::stod(fields[4]);
      if (has_gn) {
        r.g_n = std::stod(fields[5]);
        r.has_g_n = true;
      }
    } catch (const std::exception&) {
      throw ConfigError("gates csv line " + std::to_string(lineno) + ": malformed value");
    }
    rows.push_back(r);
  }
  return rows;
}

}  // namespace linmar
