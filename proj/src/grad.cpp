#include "donn/grad.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <random>
#include <set>

namespace donn {

GradientSet GradientSet::zeros_like(const DonnModel& model) {
  GradientSet g;
  for (std::size_t c = 0; c < kChannelCount; ++c) {
    for (const auto& m : model.channel(c).masks()) g.d_theta[c].emplace_back(m.theta.size(), 0.0);
  }
  return g;
}

bool GradientSet::congruent(const DonnModel& model) const {
  for (std::size_t c = 0; c < kChannelCount; ++c) {
    const auto& masks = model.channel(c).masks();
    if (d_theta[c].size() != masks.size()) return false;
    for (std::size_t l = 0; l < masks.size(); ++l) {
      if (d_theta[c][l].size() != masks[l].theta.size()) return false;
    }
  }
  return true;
}

bool GradientSet::congruent(const GradientSet& other) const {
  for (std::size_t c = 0; c < kChannelCount; ++c) {
    if (d_theta[c].size() != other.d_theta[c].size()) return false;
    for (std::size_t l = 0; l < d_theta[c].size(); ++l) {
      if (d_theta[c][l].size() != other.d_theta[c][l].size()) return false;
    }
  }
  return true;
}

void GradientSet::add(const GradientSet& other) {
  if (!congruent(other)) throw DimensionError("GradientSet::add: shape mismatch");
  for (std::size_t c = 0; c < kChannelCount; ++c) {
    for (std::size_t l = 0; l < d_theta[c].size(); ++l) {
      auto& dst = d_theta[c][l];
      const auto& src = other.d_theta[c][l];
      for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
    }
  }
}

void GradientSet::scale(double factor) {
  for (auto& channel : d_theta) {
    for (auto& layer : channel) {
      for (auto& v : layer) v *= factor;
    }
  }
}

double GradientSet::max_abs() const {
  double m = 0.0;
  for (const auto& channel : d_theta) {
    for (const auto& layer : channel) {
      for (double v : layer) m = std::max(m, std::abs(v));
    }
  }
  return m;
}

namespace {

void check_sample(const DonnModel& model, const RgbFields& fields, const BinaryMask& gt) {
  for (std::size_t c = 0; c < kChannelCount; ++c) {
    require_same_grid(fields[c].grid(), model.channel(c).grid(), "backward");
  }
  if (gt.side() != model.grid().side_px) {
    throw DimensionError("ground truth side " + std::to_string(gt.side()) + " != model side " +
                         std::to_string(model.grid().side_px));
  }
}

IntensityMap detector_sum(std::span<const IntensityMap> per_channel, const GridSpec& grid) {
  std::vector<IntensityMap> tagged;
  tagged.reserve(per_channel.size());
  for (const auto& m : per_channel) {
    tagged.emplace_back(grid, std::vector<double>(m.values().begin(), m.values().end()));
  }
  return add_intensities(tagged);
}

ComplexField2D adjoint(const ComplexField2D& f, const PropagationKernel& k, AdjointMode mode) {
  return mode == AdjointMode::exact ? propagate_adjoint(f, k) : propagate(f, k);
}

void accumulate(std::optional<ComplexField2D>& slot, const ComplexField2D& value) {
  if (slot) {
    *slot = add_fields(*slot, value);
  } else {
    slot = value;
  }
}

void backward_channel(const ChannelPipeline& ch, const ChannelTrace& trace,
                      const ComplexField2D& detector, const RealImage& d_intensity,
                      std::vector<std::vector<double>>& d_theta, AdjointMode mode) {
  const std::size_t layers = ch.layer_count();

  // dL/d(detector field) = 2 dL/dI * field.
  ComplexField2D d_det(detector.grid());
  for (std::size_t i = 0; i < d_intensity.size(); ++i) {
    d_det.values()[i] = 2.0 * d_intensity[i] * detector.values()[i];
  }

  std::vector<std::optional<ComplexField2D>> cot(layers + 1);
  cot[layers] = ch.detector_kernel() ? adjoint(d_det, *ch.detector_kernel(), mode) : d_det;

  for (std::size_t l = layers; l >= 1; --l) {
    const ComplexField2D& upstream = *cot[l];
    const ComplexField2D& out = trace.after_layer[l];
    const auto& theta = ch.mask(l - 1).theta;
    auto& grad = d_theta[l - 1];

    ComplexField2D d_prop(upstream.grid());
    for (std::size_t i = 0; i < grad.size(); ++i) {
      const cdouble u = upstream.values()[i];
      grad[i] = std::imag(std::conj(out.values()[i]) * u);
      d_prop.values()[i] = u * std::polar(1.0, -theta[i]);
    }
    const ComplexField2D d_input = adjoint(d_prop, ch.layer_kernel(), mode);
    if (!d_input.all_finite() ||
        !std::all_of(grad.begin(), grad.end(), [](double v) { return std::isfinite(v); })) {
      throw NumericError("non-finite gradient in backward pass", static_cast<int>(l));
    }
    accumulate(cot[l - 1], d_input);
    for (const auto& s : ch.skips()) {
      if (s.to_layer != static_cast<int>(l)) continue;
      accumulate(cot[s.from_layer], adjoint(d_input, ch.skip_kernel(s), mode));
    }
    cot[l].reset();
  }
}

}  // namespace

double forward_loss(const DonnModel& model, const RgbFields& fields, const BinaryMask& gt,
                    const LossSpec& loss) {
  check_sample(model, fields, gt);
  return evaluate_loss(loss, normalize_by_max(forward_rgb(fields, model)), gt);
}

BackwardResult backward(const DonnModel& model, const RgbFields& fields, const BinaryMask& gt,
                        const LossSpec& loss, AdjointMode mode) {
  check_sample(model, fields, gt);

  std::array<ChannelTrace, kChannelCount> traces;
  std::array<ComplexField2D, kChannelCount> detectors;
  std::vector<IntensityMap> per_channel;
  for (std::size_t c = 0; c < kChannelCount; ++c) {
    traces[c] = trace_channel(fields[c], model.channel(c));
    detectors[c] = detector_field(traces[c].after_layer.back(), model.channel(c));
    per_channel.push_back(intensity(detectors[c]));
  }

  BackwardResult result;
  result.detector = detector_sum(per_channel, model.grid());
  const RealImage normalized = normalize_by_max(result.detector);
  result.loss = evaluate_loss(loss, normalized, gt);
  if (!std::isfinite(result.loss)) throw NumericError("non-finite loss", std::nullopt);

  const RealImage d_intensity = normalize_backward(result.detector, loss_gradient(loss, normalized, gt));
  result.grads = GradientSet::zeros_like(model);
  for (std::size_t c = 0; c < kChannelCount; ++c) {
    backward_channel(model.channel(c), traces[c], detectors[c], d_intensity, result.grads.d_theta[c], mode);
  }
  return result;
}

std::vector<double> finite_diff_grad(const DonnModel& model, const RgbFields& fields,
                                     const BinaryMask& gt, const LossSpec& loss,
                                     std::span<const ParamCoord> coords, double step) {
  if (coords.size() > kMaxFiniteDiffCoords) {
    throw UsageError("finite_diff_grad: at most " + std::to_string(kMaxFiniteDiffCoords) +
                     " coordinates per call");
  }
  DonnModel probe = model;
  std::vector<double> out;
  out.reserve(coords.size());
  for (const auto& p : coords) {
    auto theta = probe.channel(p.channel).theta(p.layer);
    const double original = theta[p.index];
    theta[p.index] = original + step;
    const double plus = forward_loss(probe, fields, gt, loss);
    theta[p.index] = original - step;
    const double minus = forward_loss(probe, fields, gt, loss);
    theta[p.index] = original;
    out.push_back((plus - minus) / (2.0 * step));
  }
  return out;
}

std::vector<ParamCoord> sample_coords(const DonnModel& model, std::size_t count, std::uint64_t seed) {
  const std::size_t per_mask = model.grid().pixels();
  const std::size_t total = kChannelCount * model.layer_count() * per_mask;
  if (count > total) throw UsageError("sample_coords: more coordinates than parameters");
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> pick(0, total - 1);
  std::set<std::size_t> chosen;
  std::vector<ParamCoord> coords;
  while (coords.size() < count) {
    const std::size_t flat = pick(rng);
    if (!chosen.insert(flat).second) continue;
    const std::size_t per_channel = model.layer_count() * per_mask;
    coords.push_back({flat / per_channel, (flat % per_channel) / per_mask, flat % per_mask});
  }
  return coords;
}

double relative_error(double a, double b, double floor) {
  const double denom = std::max({std::abs(a), std::abs(b), floor});
  return denom == 0.0 ? 0.0 : std::abs(a - b) / denom;
}

}  // namespace donn
