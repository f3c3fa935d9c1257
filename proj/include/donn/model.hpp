#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "donn/field.hpp"
#include "donn/propagation.hpp"

namespace donn {

// Physical defaults of the reference setup.
inline constexpr double kDefaultWavelength = 532e-9;
inline constexpr double kDefaultPitch = 36e-6;
inline constexpr double kDefaultLayerDistance = 0.2794;

inline constexpr std::size_t kChannelCount = 3;
const char* channel_name(std::size_t channel);

/// Optical skip connection from the output of layer `from_layer` to the input of
/// layer `to_layer` (1-based). Travels (to - from) * z of free space.
struct SkipSpec {
  int from_layer = 0;
  int to_layer = 0;

  int span() const { return to_layer - from_layer; }
  auto operator<=>(const SkipSpec&) const = default;
};

/// Per-pixel phase; modulation is exp(i * theta).
struct PhaseMask {
  GridSpec grid;
  std::vector<double> theta;

  static PhaseMask zeros(const GridSpec& grid) { return {grid, std::vector<double>(grid.pixels(), 0.0)}; }
  static PhaseMask constant(const GridSpec& grid, double value) {
    return {grid, std::vector<double>(grid.pixels(), value)};
  }
};

struct ChannelOptics {
  double inter_layer_z = kDefaultLayerDistance;
  /// Free space between the last mask and the detector; 0 reads out directly after the last mask.
  double detector_z = 0.0;
  int pad_factor = 2;
  TransferFunction transfer = TransferFunction::analytic_fresnel;
};

/// One colour channel: a stack of phase masks plus its skip topology.
class ChannelPipeline {
 public:
  ChannelPipeline(std::vector<PhaseMask> masks, std::vector<SkipSpec> skips, ChannelOptics optics);

  const GridSpec& grid() const { return masks_.front().grid; }
  std::size_t layer_count() const { return masks_.size(); }
  const std::vector<PhaseMask>& masks() const { return masks_; }
  const PhaseMask& mask(std::size_t layer_index) const { return masks_.at(layer_index); }
  /// Mutable phase values of one mask (shape is fixed).
  std::span<double> theta(std::size_t layer_index) { return masks_.at(layer_index).theta; }
  const std::vector<SkipSpec>& skips() const { return skips_; }
  const ChannelOptics& optics() const { return optics_; }
  double inter_layer_z() const { return optics_.inter_layer_z; }

  const PropagationKernel& layer_kernel() const { return *layer_kernel_; }
  const PropagationKernel& skip_kernel(const SkipSpec& skip) const;
  /// nullptr when the detector sits directly after the last mask.
  const PropagationKernel* detector_kernel() const { return detector_kernel_.get(); }

 private:
  std::vector<PhaseMask> masks_;
  std::vector<SkipSpec> skips_;
  ChannelOptics optics_;
  std::shared_ptr<const PropagationKernel> layer_kernel_;
  std::map<int, std::shared_ptr<const PropagationKernel>> skip_kernels_;
  std::shared_ptr<const PropagationKernel> detector_kernel_;
};

void validate_skips(const std::vector<SkipSpec>& skips, std::size_t layer_count);

struct ModelConfig {
  std::string preset = "custom";
  GridSpec grid{0, kDefaultPitch, kDefaultWavelength};
  /// Optional per-channel wavelength override (R, G, B).
  std::optional<std::array<double, kChannelCount>> channel_wavelengths_m;
  std::size_t layers = 0;
  std::vector<SkipSpec> skips;
  double z_m = kDefaultLayerDistance;
  double detector_z_m = kDefaultLayerDistance;
  int pad_factor = 2;
  TransferFunction transfer = TransferFunction::analytic_fresnel;
  AmplitudeEncoding encoding = AmplitudeEncoding::linear;
  std::uint64_t seed = 0;

  void validate() const;
  GridSpec channel_grid(std::size_t channel) const;
  ChannelOptics optics() const;
  bool operator==(const ModelConfig&) const = default;
};

/// Presets: cityscapes-15, cityscapes-12, lane-8 (custom has no preset geometry).
/// `side` rescales the grid while keeping the topology.
ModelConfig preset_config(std::string_view name, std::optional<std::size_t> side = std::nullopt);
std::vector<std::string> preset_names();

/// Three independently parameterised channel pipelines sharing one topology.
class DonnModel {
 public:
  using MaskSet = std::array<std::vector<PhaseMask>, kChannelCount>;

  DonnModel(ModelConfig config, MaskSet masks);

  const ModelConfig& config() const { return config_; }
  const GridSpec& grid() const { return config_.grid; }
  std::size_t layer_count() const { return config_.layers; }
  const ChannelPipeline& channel(std::size_t c) const { return channels_.at(c); }
  ChannelPipeline& channel(std::size_t c) { return channels_.at(c); }

 private:
  ModelConfig config_;
  std::array<ChannelPipeline, kChannelCount> channels_;
};

/// theta i.i.d. uniform on [0, 2pi) from config.seed.
DonnModel init_model(const ModelConfig& config);
DonnModel init_model(std::string_view preset, std::uint64_t seed,
                     std::optional<std::size_t> side = std::nullopt);

/// propagate over the layer gap, then apply exp(i theta).
ComplexField2D diff_mod(const ComplexField2D& f, const PhaseMask& mask, const PropagationKernel& kernel);

/// Fields after each layer of one channel; entry 0 is the input, entry l the output of layer l.
struct ChannelTrace {
  std::vector<ComplexField2D> after_layer;
};

ChannelTrace trace_channel(const ComplexField2D& f0, const ChannelPipeline& ch);

/// Field after the final mask, skip connections included.
ComplexField2D forward_channel(const ComplexField2D& f0, const ChannelPipeline& ch);

/// Carries the last-mask output to the detector plane (identity when detector_z == 0).
ComplexField2D detector_field(const ComplexField2D& channel_output, const ChannelPipeline& ch);

IntensityMap channel_intensity(const ComplexField2D& f0, const ChannelPipeline& ch);

using RgbFields = std::array<ComplexField2D, kChannelCount>;

/// I_R + I_G + I_B at the detector. Intensities are tagged with the model grid.
IntensityMap forward_rgb(const ComplexField2D& r, const ComplexField2D& g, const ComplexField2D& b,
                         const DonnModel& model);
IntensityMap forward_rgb(const RgbFields& fields, const DonnModel& model);

/// Amplitude-encodes three [0,1] channel images on the per-channel grids of `model`.
RgbFields encode_rgb(const RealImage& r, const RealImage& g, const RealImage& b, const DonnModel& model);

}  // namespace donn
