#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "donn/data.hpp"
#include "donn/metrics.hpp"
#include "donn/model.hpp"
#include "donn/optim.hpp"
#include "donn/train.hpp"
#include "json.hpp"

namespace donn::cli {

enum ExitCode : int {
  kExitOk = 0,
  kExitFailed = 1,
  kExitConfig = 2,
  kExitDataset = 3,
  kExitMismatch = 4,
  kExitIo = 5,
};

/// Environment variable naming the default parent of run directories.
inline constexpr const char* kOutputRootEnv = "DONN_OUTPUT_ROOT";
inline constexpr int kDefaultCheckpointEvery = 10;
inline constexpr std::size_t kDefaultVisualizations = 4;

/// Everything a training run needs, fully resolved.
struct RunConfig {
  ModelConfig model;
  LossSpec loss;
  AdamConfig optimizer;
  int epochs = kDefaultEpochs;
  std::size_t batch_size = kDefaultBatchSize;
  std::uint64_t seed = 0;
  std::size_t workers = 1;
  int checkpoint_every = kDefaultCheckpointEvery;
  BinarizeMethod binarize = BinarizeMethod::half;
  std::size_t visualizations = kDefaultVisualizations;
  std::filesystem::path train_data;
  std::filesystem::path eval_data;  ///< empty: no held-out evaluation
  std::filesystem::path output_dir;
};

/// Builds a RunConfig from the JSON document. Relative data paths resolve against
/// `base_dir`; unknown keys and invalid values throw ConfigError.
RunConfig run_config_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir);
RunConfig load_run_config(const std::filesystem::path& file);
nlohmann::json run_config_to_json(const RunConfig& config);

/// Relative output directories are placed under $DONN_OUTPUT_ROOT (or "runs").
std::filesystem::path resolve_output_dir(const std::filesystem::path& requested);

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Input / ground truth / raw intensity / binarized output, side by side, plus a caption
/// sidecar (`<png stem>.txt`) describing the panels and their intensity mapping.
void write_panel(const std::filesystem::path& png, const Sample& sample, const IntensityMap& detector,
                 const BinaryMask& binarized);

/// Intensity min-max mapped to 8-bit grey.
std::vector<std::uint8_t> to_gray8(std::span<const double> values);

void write_intensity_png(const std::filesystem::path& png, const IntensityMap& map);
void write_mask_png(const std::filesystem::path& png, const BinaryMask& mask);

/// Parses `args` (without the program name) and executes the command.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace donn::cli
