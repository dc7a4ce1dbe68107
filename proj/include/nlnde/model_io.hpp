#pragma once

#include <filesystem>
#include <memory>
#include <string>
#include <string_view>

#include "json.hpp"
#include "nlnde/model.hpp"

// Model file layout:
//   "NLNDEMDL" | u32 version | u64 length + JSON metadata |
//   u32 blob count | per blob: u32 name length + name, u64 rows, u64 cols,
//   rows*cols f64 (column-major) | u32 CRC-32 of everything before it.
// All integers and floats little-endian.
namespace nlnde {

inline constexpr std::uint32_t kModelFormatVersion = 1;

struct LoadedModel {
  std::unique_ptr<Tagger> tagger;
  nlohmann::json metadata;  // {"tagger": ..., "run": ...}
};

nlohmann::json tagger_metadata(const Tagger& tagger);
std::unique_ptr<Tagger> tagger_from_metadata(const nlohmann::json& meta);

std::string serialize_model(Tagger& tagger, const nlohmann::json& run_metadata);
LoadedModel deserialize_model(std::string_view bytes);

void save_model(const std::filesystem::path& path, Tagger& tagger, const nlohmann::json& run_metadata);
LoadedModel load_model(const std::filesystem::path& path);

}  // namespace nlnde
