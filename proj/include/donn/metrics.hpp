#pragma once

#include <cstdint>

#include "donn/field.hpp"

namespace donn {

struct ConfusionCounts {
  std::uint64_t tp = 0, fp = 0, fn = 0, tn = 0;
  std::uint64_t total() const { return tp + fp + fn + tn; }
};

ConfusionCounts confusion(const BinaryMask& pred, const BinaryMask& gt);

enum class BinarizeMethod { half, otsu };
BinarizeMethod binarize_method_from_string(const std::string& name);
const char* to_string(BinarizeMethod m);

/// Min-max normalise, then threshold (0.5 or Otsu). A constant map gives an
/// all-zero mask and a warning.
BinaryMask binarize_output(const IntensityMap& detector, BinarizeMethod method = BinarizeMethod::half);

/// Otsu threshold on values in [0,1] (256-bin histogram).
double otsu_threshold(std::span<const double> normalized);

/// Foreground IoU; 1 when both masks are empty.
double iou(const BinaryMask& pred, const BinaryMask& gt);

struct PrecisionRecallF1 {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

/// 0/0 ratios are 1 when both masks are empty and 0 otherwise.
PrecisionRecallF1 prf1(const BinaryMask& pred, const BinaryMask& gt);

/// 2|A and B| / (|A| + |B|); 1 when both masks are empty.
double dice_coefficient(const BinaryMask& pred, const BinaryMask& gt);

/// Published full-scale figures, kept for reports. Not reproduced at desk scale.
namespace reference {
// CityScapes IoU by input and training loss.
inline constexpr double kCityscapesRgbMseIou = 0.70;
inline constexpr double kCityscapesRgbBceIou = 0.66;
inline constexpr double kCityscapesRgbDiceIou = 0.66;
inline constexpr double kCityscapesGrayMseIou = 0.36;
// CityScapes 12-layer RGB system.
inline constexpr double kCityscapesIou = 0.71;
inline constexpr double kCityscapesF1 = 0.83;
inline constexpr double kCityscapesPrecision = 0.79;
inline constexpr double kCityscapesRecall = 0.88;
// Indoor track lane detection, 400 x 400, 8 layers.
inline constexpr double kIndoorTrackIou = 0.80;
}  // namespace reference

}  // namespace donn
