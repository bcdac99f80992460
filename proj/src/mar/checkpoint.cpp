#include "linmar/mar/checkpoint.hpp"

#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace linmar {

namespace fs = std::filesystem;

namespace {

std::string param_file_name(const std::string& name) {
  std::string f = name;
  for (char& c : f)
    if (c == '.') c = '_';
  return f + ".bin";
}

// Explicit little-endian float32 byte order, independent of host endianness.
void write_f32_le(std::ostream& os, const Tensord& t) {
  for (Index i = 0; i < t.numel(); ++i) {
    float f = static_cast<float>(t.data[i]);
    std::uint32_t bits;
    std::memcpy(&bits, &f, sizeof(bits));
    char bytes[4] = {static_cast<char>(bits & 0xff), static_cast<char>((bits >> 8) & 0xff),
                     static_cast<char>((bits >> 16) & 0xff), static_cast<char>((bits >> 24) & 0xff)};
    os.write(bytes, 4);
  }
}

Tensord read_f32_le(std::istream& is, const Shape& shape, const std::string& what) {
  Tensord t = Tensord::zeros(shape);
  for (Index i = 0; i < t.numel(); ++i) {
    unsigned char bytes[4];
    if (!is.read(reinterpret_cast<char*>(bytes), 4))
      throw ArtifactError("checkpoint: '" + what + "' is shorter than its manifest shape");
    std::uint32_t bits = std::uint32_t(bytes[0]) | (std::uint32_t(bytes[1]) << 8) |
                         (std::uint32_t(bytes[2]) << 16) | (std::uint32_t(bytes[3]) << 24);
    float f;
    std::memcpy(&f, &bits, sizeof(f));
    t.data[i] = static_cast<double>(f);
  }
  char extra;
  if (is.read(&extra, 1))
    throw ArtifactError("checkpoint: '" + what + "' is longer than its manifest shape");
  return t;
}

}  // namespace

void save_checkpoint(const std::string& dir, const ParamStore& store, const std::string& config_text) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw ArtifactError("save_checkpoint: cannot create '" + dir + "': " + ec.message());

  nlohmann::ordered_json manifest;
  manifest["format"] = "linmar-checkpoint-v1";
  manifest["params"] = nlohmann::ordered_json::array();
  for (const auto& [name, t] : store.all()) {
    std::string file = param_file_name(name);
    std::ofstream f(fs::path(dir) / file, std::ios::binary);
    if (!f) throw ArtifactError("save_checkpoint: cannot open '" + file + "' for writing");
    write_f32_le(f, t);
    if (!f) throw ArtifactError("save_checkpoint: write to '" + file + "' failed");
    nlohmann::ordered_json entry;
    entry["name"] = name;
    entry["shape"] = t.shape;
    entry["dtype"] = "float32";
    entry["file"] = file;
    manifest["params"].push_back(std::move(entry));
  }

  std::ofstream mf(fs::path(dir) / "manifest.json", std::ios::binary);
  if (!mf) throw ArtifactError("save_checkpoint: cannot write manifest.json");
  mf << manifest.dump(2) << "\n";

  std::ofstream cf(fs::path(dir) / "config.cfg", std::ios::binary);
  if (!cf) throw ArtifactError("save_checkpoint: cannot write config.cfg");
  cf << config_text;
}

Checkpoint load_checkpoint(const std::string& dir) {
  fs::path root(dir);
  std::ifstream mf(root / "manifest.json", std::ios::binary);
  if (!mf) throw ArtifactError("load_checkpoint: no manifest.json in '" + dir + "'");
  nlohmann::json manifest;
  try {
    mf >> manifest;
  } catch (const nlohmann::json::exception& e) {
    throw ArtifactError("load_checkpoint: manifest.json is not valid JSON: " + std::string(e.what()));
  }
  if (manifest.value("format", "") != "linmar-checkpoint-v1")
    throw ArtifactError("load_checkpoint: unrecognized checkpoint format");

  Checkpoint ckpt;
  for (const auto& entry : manifest.at("params")) {
    std::string name = entry.at("name").get<std::string>();
    if (entry.at("dtype").get<std::string>() != "float32")
      throw ArtifactError("load_checkpoint: parameter '" + name + "' has unsupported dtype");
    Shape shape = entry.at("shape").get<Shape>();
    std::string file = entry.at("file").get<std::string>();
    std::ifstream pf(root / file, std::ios::binary);
    if (!pf) throw ArtifactError("load_checkpoint: missing parameter file '" + file + "'");
    ckpt.store.add(name, read_f32_le(pf, shape, file));
  }

  std::ifstream cf(root / "config.cfg", std::ios::binary);
  if (!cf) throw ArtifactError("load_checkpoint: no config.cfg in '" + dir + "'");
  std::ostringstream os;
  os << cf.rdbuf();
  ckpt.config_text = os.str();
  return ckpt;
}

}  // namespace linmar
