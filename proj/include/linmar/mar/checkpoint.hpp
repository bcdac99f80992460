#pragma once

#include <string>

#include "linmar/mar/model.hpp"

// Checkpoint = directory of raw little-endian float32 arrays, one file per
// parameter, plus manifest.json (name, shape, dtype, file per entry) and the
// config text the model was built from. Parameters are held in float64 in
// memory; serialization rounds through float32 both ways.

namespace linmar {

void save_checkpoint(const std::string& dir, const ParamStore& store, const std::string& config_text);

struct Checkpoint {
  ParamStore store;
  std::string config_text;
};

// Throws ArtifactError when dir or its manifest is missing/inconsistent.
Checkpoint load_checkpoint(const std::string& dir);

}  // namespace linmar
