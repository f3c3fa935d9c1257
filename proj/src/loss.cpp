#include "donn/loss.hpp"

#include <algorithm>
#include <cmath>

namespace donn {
namespace {

void check_pair(const RealImage& p, const BinaryMask& gt, const char* what) {
  if (p.side() != gt.side()) {
    throw DimensionError(std::string(what) + ": map side " + std::to_string(p.side()) +
                         " != mask side " + std::to_string(gt.side()));
  }
}

double clamp_probability(double p) { return std::clamp(p, kBceClamp, 1.0 - kBceClamp); }

}  // namespace

LossSpec LossSpec::parse(const std::string& name, double pos_weight) {
  if (name == "mse") return {LossKind::mse, 1.0, false};
  if (name == "dice") return {LossKind::dice, 1.0, false};
  if (name == "bce") return {LossKind::bce, pos_weight, false};
  if (name == "wbce") return {LossKind::bce, pos_weight, true};
  throw UsageError("unknown loss '" + name + "' (expected mse|bce|wbce|dice)");
}

std::string LossSpec::name() const {
  switch (kind) {
    case LossKind::mse:
      return "mse";
    case LossKind::dice:
      return "dice";
    case LossKind::bce:
      return auto_pos_weight ? "wbce" : "bce";
  }
  return "?";
}

RealImage normalize_by_max(const IntensityMap& detector) {
  const double scale = std::max(detector.max(), kNormalizerFloor);
  RealImage p(detector.side());
  for (std::size_t i = 0; i < p.size(); ++i) p[i] = detector.values()[i] / scale;
  return p;
}

RealImage normalize_backward(const IntensityMap& detector, const RealImage& d_normalized) {
  if (d_normalized.side() != detector.side()) throw DimensionError("normalize_backward: side mismatch");
  const auto v = detector.values();
  const auto argmax = static_cast<std::size_t>(std::max_element(v.begin(), v.end()) - v.begin());
  const double peak = v[argmax];
  const double scale = std::max(peak, kNormalizerFloor);

  RealImage d(detector.side());
  double dot = 0.0;
  for (std::size_t i = 0; i < d.size(); ++i) {
    d[i] = d_normalized[i] / scale;
    dot += d_normalized[i] * v[i];
  }
  // Below the floor the scale is a constant.
  if (peak > kNormalizerFloor) d[argmax] -= dot / (scale * scale);
  return d;
}

double loss_mse(const RealImage& p, const BinaryMask& gt) {
  check_pair(p, gt, "loss_mse");
  long double s = 0.0L;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const long double d = static_cast<long double>(gt[i]) - p[i];
    s += d * d;
  }
  return static_cast<double>(s / static_cast<long double>(p.size()));
}

double loss_bce(const RealImage& p, const BinaryMask& gt, double pos_weight) {
  check_pair(p, gt, "loss_bce");
  if (!(pos_weight > 0.0)) throw DomainError("loss_bce: pos_weight must be > 0");
  long double s = 0.0L;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const long double q = clamp_probability(p[i]);
    s -= gt[i] ? pos_weight * std::log(q) : std::log1p(-q);
  }
  return static_cast<double>(s / static_cast<long double>(p.size()));
}

double loss_dice(const RealImage& p, const BinaryMask& gt) {
  check_pair(p, gt, "loss_dice");
  long double overlap = 0.0L, sum_p = 0.0L, sum_g = 0.0L;
  for (std::size_t i = 0; i < p.size(); ++i) {
    overlap += p[i] * gt[i];
    sum_p += p[i];
    sum_g += gt[i];
  }
  return static_cast<double>(1.0L - (2.0L * overlap + kDiceSmoothing) / (sum_p + sum_g + kDiceSmoothing));
}

double evaluate_loss(const LossSpec& spec, const RealImage& p, const BinaryMask& gt) {
  switch (spec.kind) {
    case LossKind::mse:
      return loss_mse(p, gt);
    case LossKind::bce:
      return loss_bce(p, gt, spec.pos_weight);
    case LossKind::dice:
      return loss_dice(p, gt);
  }
  throw UsageError("unknown loss kind");
}

RealImage loss_gradient(const LossSpec& spec, const RealImage& p, const BinaryMask& gt) {
  check_pair(p, gt, "loss_gradient");
  const double n = static_cast<double>(p.size());
  RealImage d(p.side());
  switch (spec.kind) {
    case LossKind::mse:
      for (std::size_t i = 0; i < p.size(); ++i) d[i] = 2.0 * (p[i] - gt[i]) / n;
      break;
    case LossKind::bce:
      for (std::size_t i = 0; i < p.size(); ++i) {
        // The clamp is flat outside (eps, 1 - eps).
        if (!(p[i] > kBceClamp && p[i] < 1.0 - kBceClamp)) continue;
        d[i] = (gt[i] ? -spec.pos_weight / p[i] : 1.0 / (1.0 - p[i])) / n;
      }
      break;
    case LossKind::dice: {
      long double overlap = 0.0L, sum_p = 0.0L, sum_g = 0.0L;
      for (std::size_t i = 0; i < p.size(); ++i) {
        overlap += p[i] * gt[i];
        sum_p += p[i];
        sum_g += gt[i];
      }
      const double num = 2.0 * overlap + kDiceSmoothing;
      const double den = sum_p + sum_g + kDiceSmoothing;
      for (std::size_t i = 0; i < p.size(); ++i) d[i] = -(2.0 * gt[i] * den - num) / (den * den);
      break;
    }
  }
  return d;
}

double balanced_pos_weight(std::span<const BinaryMask> masks) {
  double pos = 0.0, total = 0.0;
  for (const auto& m : masks) {
    for (auto v : m) pos += v;
    total += static_cast<double>(m.size());
  }
  if (pos == 0.0) return 1.0;
  return (total - pos) / pos;
}

}  // namespace donn
