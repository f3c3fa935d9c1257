#include "donn/metrics.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include "donn/log.hpp"

namespace donn {
namespace {

void check_masks(const BinaryMask& pred, const BinaryMask& gt, const char* what) {
  if (pred.side() != gt.side()) {
    throw DimensionError(std::string(what) + ": mask sides differ (" + std::to_string(pred.side()) +
                         " vs " + std::to_string(gt.side()) + ")");
  }
  require_binary(pred, what);
  require_binary(gt, what);
}

}  // namespace

ConfusionCounts confusion(const BinaryMask& pred, const BinaryMask& gt) {
  check_masks(pred, gt, "confusion");
  ConfusionCounts k;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const bool p = pred[i] != 0, g = gt[i] != 0;
    if (p && g) ++k.tp;
    else if (p) ++k.fp;
    else if (g) ++k.fn;
    else ++k.tn;
  }
  return k;
}

BinarizeMethod binarize_method_from_string(const std::string& name) {
  if (name == "half") return BinarizeMethod::half;
  if (name == "otsu") return BinarizeMethod::otsu;
  throw UsageError("unknown binarization '" + name + "' (expected half|otsu)");
}

const char* to_string(BinarizeMethod m) { return m == BinarizeMethod::otsu ? "otsu" : "half"; }

double otsu_threshold(std::span<const double> v) {
  constexpr int kBins = 256;
  std::array<double, kBins> hist{};
  for (double x : v) hist[static_cast<std::size_t>(std::clamp(x, 0.0, 1.0) * (kBins - 1) + 0.5)] += 1.0;
  const double total = static_cast<double>(v.size());
  double sum_all = 0.0;
  for (int i = 0; i < kBins; ++i) sum_all += i * hist[static_cast<std::size_t>(i)];

  double weight_bg = 0.0, sum_bg = 0.0, best = -1.0;
  int best_bin = kBins / 2;
  for (int t = 0; t < kBins - 1; ++t) {
    weight_bg += hist[static_cast<std::size_t>(t)];
    sum_bg += t * hist[static_cast<std::size_t>(t)];
    const double weight_fg = total - weight_bg;
    if (weight_bg == 0.0 || weight_fg == 0.0) continue;
    const double mean_bg = sum_bg / weight_bg;
    const double mean_fg = (sum_all - sum_bg) / weight_fg;
    const double between = weight_bg * weight_fg * (mean_bg - mean_fg) * (mean_bg - mean_fg);
    if (between > best) {
      best = between;
      best_bin = t;
    }
  }
  // Pixels in bins above best_bin are foreground.
  return (best_bin + 0.5) / (kBins - 1);
}

BinaryMask binarize_output(const IntensityMap& detector, BinarizeMethod method) {
  const double lo = detector.min();
  const double hi = detector.max();
  BinaryMask out(detector.side());
  if (!(hi > lo)) {
    warn("binarize_output: constant detector map; returning an all-zero mask");
    return out;
  }
  std::vector<double> norm(detector.values().size());
  for (std::size_t i = 0; i < norm.size(); ++i) norm[i] = (detector.values()[i] - lo) / (hi - lo);
  const double threshold = method == BinarizeMethod::otsu ? otsu_threshold(norm) : 0.5;
  for (std::size_t i = 0; i < norm.size(); ++i) out[i] = norm[i] >= threshold ? 1 : 0;
  return out;
}

double iou(const BinaryMask& pred, const BinaryMask& gt) {
  const auto k = confusion(pred, gt);
  const auto uni = k.tp + k.fp + k.fn;
  return uni == 0 ? 1.0 : static_cast<double>(k.tp) / static_cast<double>(uni);
}

PrecisionRecallF1 prf1(const BinaryMask& pred, const BinaryMask& gt) {
  const auto k = confusion(pred, gt);
  const bool both_empty = k.tp + k.fp + k.fn == 0;
  auto ratio = [&](std::uint64_t num, std::uint64_t den) {
    if (den == 0) return both_empty ? 1.0 : 0.0;
    return static_cast<double>(num) / static_cast<double>(den);
  };
  PrecisionRecallF1 m;
  m.precision = ratio(k.tp, k.tp + k.fp);
  m.recall = ratio(k.tp, k.tp + k.fn);
  m.f1 = m.precision + m.recall > 0.0 ? 2.0 * m.precision * m.recall / (m.precision + m.recall) : 0.0;
  return m;
}

double dice_coefficient(const BinaryMask& pred, const BinaryMask& gt) {
  const auto k = confusion(pred, gt);
  const auto den = 2 * k.tp + k.fp + k.fn;
  return den == 0 ? 1.0 : 2.0 * static_cast<double>(k.tp) / static_cast<double>(den);
}

}  // namespace donn
