#include "donn/model.hpp"

#include <algorithm>
#include <numbers>
#include <random>
#include <set>

namespace donn {

const char* channel_name(std::size_t channel) {
  static constexpr const char* kNames[kChannelCount] = {"R", "G", "B"};
  return channel < kChannelCount ? kNames[channel] : "?";
}

void validate_skips(const std::vector<SkipSpec>& skips, std::size_t layer_count) {
  std::set<SkipSpec> seen;
  const int n = static_cast<int>(layer_count);
  for (const auto& s : skips) {
    if (s.from_layer < 1 || s.to_layer > n || s.to_layer <= s.from_layer + 1) {
      throw UsageError("invalid skip (" + std::to_string(s.from_layer) + "->" +
                       std::to_string(s.to_layer) + ") for " + std::to_string(n) +
                       " layers; need 1 <= a, a + 1 < b <= layers");
    }
    if (!seen.insert(s).second) {
      throw UsageError("duplicate skip (" + std::to_string(s.from_layer) + "->" +
                       std::to_string(s.to_layer) + ")");
    }
  }
}

ChannelPipeline::ChannelPipeline(std::vector<PhaseMask> masks, std::vector<SkipSpec> skips,
                                 ChannelOptics optics)
    : masks_(std::move(masks)), skips_(std::move(skips)), optics_(optics) {
  if (masks_.empty()) throw UsageError("ChannelPipeline: at least one layer required");
  const GridSpec& g = masks_.front().grid;
  g.validate();
  for (const auto& m : masks_) {
    require_same_grid(g, m.grid, "ChannelPipeline");
    if (m.theta.size() != g.pixels()) throw DimensionError("ChannelPipeline: phase mask size mismatch");
    if (!std::all_of(m.theta.begin(), m.theta.end(), [](double t) { return std::isfinite(t); })) {
      throw DomainError("ChannelPipeline: non-finite phase");
    }
  }
  validate_skips(skips_, masks_.size());
  if (optics_.detector_z < 0.0) throw DomainError("detector distance must be >= 0");

  auto& cache = KernelCache::global();
  layer_kernel_ = cache.get(g, optics_.inter_layer_z, optics_.pad_factor, optics_.transfer);
  for (const auto& s : skips_) {
    if (!skip_kernels_.contains(s.span())) {
      skip_kernels_.emplace(s.span(), cache.get(g, s.span() * optics_.inter_layer_z,
                                                optics_.pad_factor, optics_.transfer));
    }
  }
  if (optics_.detector_z > 0.0) {
    detector_kernel_ = cache.get(g, optics_.detector_z, optics_.pad_factor, optics_.transfer);
  }
}

const PropagationKernel& ChannelPipeline::skip_kernel(const SkipSpec& skip) const {
  auto it = skip_kernels_.find(skip.span());
  if (it == skip_kernels_.end()) throw UsageError("no kernel for skip span " + std::to_string(skip.span()));
  return *it->second;
}

void ModelConfig::validate() const {
  grid.validate();
  if (layers < 1) throw UsageError("model needs at least one layer");
  validate_skips(skips, layers);
  if (!(z_m > 0.0)) throw DomainError("layer distance must be > 0");
  if (detector_z_m < 0.0) throw DomainError("detector distance must be >= 0");
  if (pad_factor != 1 && pad_factor != 2) throw UsageError("pad factor must be 1 or 2");
  if (channel_wavelengths_m) {
    for (double wl : *channel_wavelengths_m) {
      if (!(wl > 0.0)) throw DomainError("channel wavelength must be > 0");
    }
  }
}

GridSpec ModelConfig::channel_grid(std::size_t channel) const {
  if (channel_wavelengths_m) return grid.with_wavelength((*channel_wavelengths_m)[channel]);
  return grid;
}

ChannelOptics ModelConfig::optics() const { return {z_m, detector_z_m, pad_factor, transfer}; }

std::vector<std::string> preset_names() { return {"cityscapes-15", "cityscapes-12", "lane-8", "custom"}; }

ModelConfig preset_config(std::string_view name, std::optional<std::size_t> side) {
  ModelConfig cfg;
  cfg.preset = std::string(name);
  std::size_t default_side = 0;
  if (name == "cityscapes-15") {
    default_side = 480;
    cfg.layers = 15;
    cfg.skips = {{1, 15}, {2, 14}, {3, 13}};
  } else if (name == "cityscapes-12") {
    default_side = 480;
    cfg.layers = 12;
    cfg.skips = {{1, 12}, {2, 11}, {3, 10}};
  } else if (name == "lane-8") {
    default_side = 400;
    cfg.layers = 8;
    cfg.skips = {{1, 6}, {2, 7}, {3, 8}};
  } else if (name == "custom") {
    throw UsageError("preset 'custom' needs an explicit grid, layer count and skip list");
  } else {
    throw UsageError("unknown preset '" + std::string(name) + "'");
  }
  cfg.grid = GridSpec::make(side.value_or(default_side), kDefaultPitch, kDefaultWavelength);
  cfg.z_m = kDefaultLayerDistance;
  cfg.detector_z_m = kDefaultLayerDistance;
  return cfg;
}

DonnModel::DonnModel(ModelConfig config, MaskSet masks)
    : config_(std::move(config)),
      channels_{ChannelPipeline(std::move(masks[0]), config_.skips, config_.optics()),
                ChannelPipeline(std::move(masks[1]), config_.skips, config_.optics()),
                ChannelPipeline(std::move(masks[2]), config_.skips, config_.optics())} {
  config_.validate();
  for (std::size_t c = 0; c < kChannelCount; ++c) {
    if (channels_[c].layer_count() != config_.layers) {
      throw DimensionError("DonnModel: channel " + std::string(channel_name(c)) + " has " +
                           std::to_string(channels_[c].layer_count()) + " layers, expected " +
                           std::to_string(config_.layers));
    }
    require_same_grid(config_.channel_grid(c), channels_[c].grid(), "DonnModel");
  }
}

DonnModel init_model(const ModelConfig& config) {
  config.validate();
  std::mt19937_64 rng(config.seed);
  std::uniform_real_distribution<double> phase(0.0, 2.0 * std::numbers::pi);
  DonnModel::MaskSet masks;
  for (std::size_t c = 0; c < kChannelCount; ++c) {
    const GridSpec g = config.channel_grid(c);
    for (std::size_t l = 0; l < config.layers; ++l) {
      PhaseMask m = PhaseMask::zeros(g);
      for (auto& t : m.theta) t = phase(rng);
      masks[c].push_back(std::move(m));
    }
  }
  return DonnModel(config, std::move(masks));
}

DonnModel init_model(std::string_view preset, std::uint64_t seed, std::optional<std::size_t> side) {
  ModelConfig cfg = preset_config(preset, side);
  cfg.seed = seed;
  return init_model(cfg);
}

ComplexField2D diff_mod(const ComplexField2D& f, const PhaseMask& mask, const PropagationKernel& kernel) {
  require_same_grid(f.grid(), mask.grid, "diff_mod");
  ComplexField2D out = propagate(f, kernel);
  auto v = out.values();
  for (std::size_t i = 0; i < v.size(); ++i) v[i] *= std::polar(1.0, mask.theta[i]);
  return out;
}

ChannelTrace trace_channel(const ComplexField2D& f0, const ChannelPipeline& ch) {
  require_same_grid(f0.grid(), ch.grid(), "forward_channel");
  ChannelTrace trace;
  trace.after_layer.reserve(ch.layer_count() + 1);
  trace.after_layer.push_back(f0);
  for (std::size_t l = 1; l <= ch.layer_count(); ++l) {
    ComplexField2D input = trace.after_layer[l - 1];
    for (const auto& s : ch.skips()) {
      if (s.to_layer != static_cast<int>(l)) continue;
      input = add_fields(input, propagate(trace.after_layer[s.from_layer], ch.skip_kernel(s)));
    }
    ComplexField2D out = diff_mod(input, ch.mask(l - 1), ch.layer_kernel());
    if (!out.all_finite()) throw NumericError("non-finite field in forward pass", static_cast<int>(l));
    trace.after_layer.push_back(std::move(out));
  }
  return trace;
}

ComplexField2D forward_channel(const ComplexField2D& f0, const ChannelPipeline& ch) {
  return std::move(trace_channel(f0, ch).after_layer.back());
}

ComplexField2D detector_field(const ComplexField2D& channel_output, const ChannelPipeline& ch) {
  if (const auto* k = ch.detector_kernel()) return propagate(channel_output, *k);
  return channel_output;
}

IntensityMap channel_intensity(const ComplexField2D& f0, const ChannelPipeline& ch) {
  return intensity(detector_field(forward_channel(f0, ch), ch));
}

namespace {

IntensityMap retag(const IntensityMap& m, const GridSpec& grid) {
  return IntensityMap(grid, std::vector<double>(m.values().begin(), m.values().end()));
}

}  // namespace

IntensityMap forward_rgb(const RgbFields& fields, const DonnModel& model) {
  std::vector<IntensityMap> parts;
  parts.reserve(kChannelCount);
  for (std::size_t c = 0; c < kChannelCount; ++c) {
    parts.push_back(retag(channel_intensity(fields[c], model.channel(c)), model.grid()));
  }
  return add_intensities(parts);
}

IntensityMap forward_rgb(const ComplexField2D& r, const ComplexField2D& g, const ComplexField2D& b,
                         const DonnModel& model) {
  return forward_rgb(RgbFields{r, g, b}, model);
}

RgbFields encode_rgb(const RealImage& r, const RealImage& g, const RealImage& b, const DonnModel& model) {
  const auto enc = model.config().encoding;
  return {field_from_amplitude(r, model.config().channel_grid(0), enc),
          field_from_amplitude(g, model.config().channel_grid(1), enc),
          field_from_amplitude(b, model.config().channel_grid(2), enc)};
}

}  // namespace donn
