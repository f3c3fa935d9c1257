#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include "donn/model.hpp"
#include "json.hpp"

namespace donn {

// Checkpoint container layout:
//   bytes 0..7   "DONNCKPT"
//   bytes 8..15  header length H as little-endian uint64
//   next H bytes JSON header (preset, grid, lambda, z, pad, layers, skips, seed, epoch, ...)
//   payload      theta for channel R, G, B; within a channel layer 1..L; each mask
//                row-major; every value a little-endian IEEE-754 float64.
inline constexpr std::string_view kCheckpointMagic = "DONNCKPT";
inline constexpr int kCheckpointFormatVersion = 1;

struct Checkpoint {
  DonnModel model;
  int epoch = 0;
};

nlohmann::json model_config_to_json(const ModelConfig& config);
ModelConfig model_config_from_json(const nlohmann::json& j);

std::string serialize_checkpoint(const DonnModel& model, int epoch);
/// Throws ValidationError on a malformed container or a header/payload mismatch.
Checkpoint parse_checkpoint(std::string_view bytes);

void save_checkpoint(const std::filesystem::path& path, const DonnModel& model, int epoch);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace donn
