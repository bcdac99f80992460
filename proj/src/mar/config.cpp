#include "linmar/mar/config.hpp"

#include <fstream>
#include <sstream>

namespace linmar {

namespace {

std::string trim(const std::string& s) {
  size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  size_t e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

}  // namespace

KeyValueConfig KeyValueConfig::from_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ArtifactError("config file '" + path + "' not found");
  std::ostringstream os;
  os << f.rdbuf();
  return from_string(os.str(), path);
}

KeyValueConfig KeyValueConfig::from_string(const std::string& text, const std::string& origin) {
  KeyValueConfig cfg;
  cfg.origin_ = origin;
  std::istringstream is(text);
  std::string line;
  size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    size_t hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    std::string where = origin + ":" + std::to_string(lineno);
    size_t eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError(where + ": expected 'key = value', got '" + line + "'");
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (key.empty()) throw ConfigError(where + ": empty key");
    if (cfg.values_.count(key)) throw ConfigError(where + ": duplicate key '" + key + "'");
    cfg.entries_.emplace_back(key, value);
    cfg.values_[key] = value;
  }
  return cfg;
}

void KeyValueConfig::apply_override(const std::string& keyval) {
  size_t eq = keyval.find('=');
  if (eq == std::string::npos)
    throw ConfigError("override '" + keyval + "': expected key=value");
  std::string key = trim(keyval.substr(0, eq));
  std::string value = trim(keyval.substr(eq + 1));
  if (key.empty()) throw ConfigError("override '" + keyval + "': empty key");
  values_[key] = value;  // overrides may replace file values
  overrides_.push_back(key + " = " + value);
}

std::string KeyValueConfig::raw(const std::string& key) const {
  read_.insert(key);
  auto it = values_.find(key);
  if (it == values_.end()) throw ContractError("KeyValueConfig::raw: missing key '" + key + "'");
  return it->second;
}

std::string KeyValueConfig::get_string(const std::string& key, const std::string& fallback) const {
  read_.insert(key);
  auto it = values_.find(key);
  return it == values_.end() ? fallback : it->second;
}

std::int64_t KeyValueConfig::get_int(const std::string& key, std::int64_t fallback) const {
  if (!has(key)) {
    read_.insert(key);
    return fallback;
  }
  std::string v = raw(key);
  try {
    size_t pos = 0;
    std::int64_t out = std::stoll(v, &pos);
    if (pos != v.size()) throw std::invalid_argument("trailing characters");
    return out;
  } catch (const std::exception&) {
    throw ConfigError(origin_ + ": key '" + key + "': '" + v + "' is not an integer");
  }
}

double KeyValueConfig::get_double(const std::string& key, double fallback) const {
  if (!has(key)) {
    read_.insert(key);
    return fallback;
  }
  std::string v = raw(key);
  try {
    size_t pos = 0;
    double out = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument("trailing characters");
    return out;
  } catch (const std::exception&) {
    throw ConfigError(origin_ + ": key '" + key + "': '" + v + "' is not a number");
  }
}

bool KeyValueConfig::get_bool(const std::string& key, bool fallback) const {
  if (!has(key)) {
    read_.insert(key);
    return fallback;
  }
  std::string v = raw(key);
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw ConfigError(origin_ + ": key '" + key + "': '" + v + "' is not a boolean");
}

void KeyValueConfig::reject_unknown() const {
  std::string bad;
  for (const auto& [k, v] : values_)
    if (!read_.count(k)) bad += (bad.empty() ? "" : ", ") + k;
  if (!bad.empty()) throw ConfigError(origin_ + ": unknown keys: " + bad);
}

std::string KeyValueConfig::render() const {
  std::ostringstream os;
  std::set<std::string> emitted;
  for (const auto& [k, v] : entries_) {
    if (emitted.count(k)) continue;
    emitted.insert(k);
    os << k << " = " << values_.at(k) << "\n";
  }
  for (const auto& [k, v] : values_)
    if (!emitted.count(k)) {
      os << k << " = " << v << "\n";
      emitted.insert(k);
    }
  return os.str();
}

EngineConfig engine_config_from(const KeyValueConfig& cfg) {
  EngineConfig e;

  ModelSpec& m = e.model;
  m.connector_layers = cfg.get_int("connector_layers", m.connector_layers);
  m.encoder_layers = cfg.get_int("encoder_layers", m.encoder_layers);
  m.decoder_layers = cfg.get_int("decoder_layers", m.decoder_layers);
  m.model_dim = cfg.get_int("model_dim", m.model_dim);
  m.n_heads = cfg.get_int("n_heads", m.n_heads);
  m.layout.n_query = cfg.get_int("n_query", m.layout.n_query);
  m.layout.grid_h = cfg.get_int("grid_h", m.layout.grid_h);
  m.layout.grid_w = cfg.get_int("grid_w", m.layout.grid_w);
  m.token_dim = cfg.get_int("token_dim", m.token_dim);
  m.n_classes = cfg.get_int("n_classes", m.n_classes);
  m.kernel = kernel_from_string(cfg.get_string("kernel", to_string(m.kernel)));
  m.epsilon = cfg.get_double("epsilon", m.epsilon);
  m.strict_normalizer = cfg.get_bool("strict_normalizer", m.strict_normalizer);
  m.gate_mode = gate_mode_from_string(cfg.get_string("gate_mode", to_string(m.gate_mode)));
  m.gate_sharing = gate_sharing_from_string(cfg.get_string("gate_sharing", to_string(m.gate_sharing)));
  m.use_dwc = cfg.get_bool("use_dwc", m.use_dwc);
  m.dwc_kernel_size = cfg.get_int("dwc_kernel_size", m.dwc_kernel_size);
  m.ffn_mult = cfg.get_int("ffn_mult", m.ffn_mult);
  m.head_width = cfg.get_int("head_width", m.head_width);
  m.head_depth = cfg.get_int("head_depth", m.head_depth);
  m.validate();

  TrainConfig& t = e.train;
  t.steps = cfg.get_int("steps", t.steps);
  t.batch_size = cfg.get_int("batch_size", t.batch_size);
  t.lr = cfg.get_double("lr", t.lr);
  t.momentum = cfg.get_double("momentum", t.momentum);
  t.cond_drop_prob = cfg.get_double("cond_drop_prob", t.cond_drop_prob);
  t.mask_ratio_min = cfg.get_double("mask_ratio_min", t.mask_ratio_min);
  t.mask_ratio_max = cfg.get_double("mask_ratio_max", t.mask_ratio_max);
  t.validate();

  ToyDataConfig& d = e.data;
  d.dataset_size = cfg.get_int("dataset_size", d.dataset_size);
  d.noise_std = cfg.get_double("noise_std", d.noise_std);
  d.validate();

  GenerateConfig& g = e.generate;
  g.k_steps = cfg.get_int("k_steps", g.k_steps);
  g.flow_steps = cfg.get_int("flow_steps", g.flow_steps);
  g.cfg_scale = cfg.get_double("cfg_scale", g.cfg_scale);
  g.curve = size_curve_from_string(cfg.get_string("schedule_curve", to_string(g.curve)));
  g.validate();

  e.n_generate_samples = cfg.get_int("n_generate_samples", e.n_generate_samples);
  if (e.n_generate_samples < 1) throw ConfigError("n_generate_samples must be >= 1");

  cfg.reject_unknown();
  return e;
}

}  // namespace linmar
