#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "linmar/mar/generate.hpp"
#include "linmar/mar/model.hpp"
#include "linmar/mar/train.hpp"

// Flat `key = value` config files: one pair per line, '#' starts a comment,
// blank lines ignored. Errors cite file and line. CLI overrides use the same
// key=value syntax. Typed getters record which keys were read so that unknown
// keys can be rejected after a config struct is built.

namespace linmar {

class KeyValueConfig {
 public:
  static KeyValueConfig from_file(const std::string& path);
  static KeyValueConfig from_string(const std::string& text, const std::string& origin = "<config>");

  // "key=value"; malformed input (empty key, missing '=') is a ConfigError.
  void apply_override(const std::string& keyval);

  bool has(const std::string& key) const { return values_.count(key) > 0; }

  std::string get_string(const std::string& key, const std::string& fallback) const;
  std::int64_t get_int(const std::string& key, std::int64_t fallback) const;
  double get_double(const std::string& key, double fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;

  // ConfigError naming every key that was set but never read.
  void reject_unknown() const;

  // Original text plus any overrides appended, for embedding in checkpoints.
  std::string render() const;

  const std::string& origin() const { return origin_; }

 private:
  std::string raw(const std::string& key) const;

  std::string origin_;
  std::vector<std::pair<std::string, std::string>> entries_;  // file order
  std::map<std::string, std::string> values_;
  std::vector<std::string> overrides_;
  mutable std::set<std::string> read_;
};

struct EngineConfig {
  ModelSpec model;
  TrainConfig train;
  ToyDataConfig data;
  GenerateConfig generate;
  Index n_generate_samples = 32;
};

// Builds the engine config and rejects unknown keys.
EngineConfig engine_config_from(const KeyValueConfig& cfg);

}  // namespace linmar
