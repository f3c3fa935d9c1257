#pragma once

#include <span>
#include <string>

#include "donn/field.hpp"

namespace donn {

inline constexpr double kBceClamp = 1e-7;
inline constexpr double kDiceSmoothing = 1.0;
inline constexpr double kNormalizerFloor = 1e-12;

enum class LossKind { mse, bce, dice };

/// Loss selector. Weighted BCE is `bce` with pos_weight != 1; `auto_pos_weight`
/// asks the trainer to use #negatives / #positives of each batch.
struct LossSpec {
  LossKind kind = LossKind::mse;
  double pos_weight = 1.0;
  bool auto_pos_weight = false;

  /// mse | bce | wbce | dice. "wbce" enables auto_pos_weight.
  static LossSpec parse(const std::string& name, double pos_weight = 1.0);
  std::string name() const;
};

/// Divides by the per-sample maximum (floored at kNormalizerFloor) so values lie in [0, 1].
RealImage normalize_by_max(const IntensityMap& detector);

/// Chain rule through normalize_by_max. The maximum is differentiated exactly
/// (its subgradient goes to the arg-max pixel).
RealImage normalize_backward(const IntensityMap& detector, const RealImage& d_normalized);

double loss_mse(const RealImage& normalized, const BinaryMask& gt);
double loss_bce(const RealImage& normalized, const BinaryMask& gt, double pos_weight = 1.0);
double loss_dice(const RealImage& normalized, const BinaryMask& gt);
double evaluate_loss(const LossSpec& spec, const RealImage& normalized, const BinaryMask& gt);

/// dLoss / d(normalized map).
RealImage loss_gradient(const LossSpec& spec, const RealImage& normalized, const BinaryMask& gt);

/// #negatives / #positives pooled over masks; 1 when there are no positives.
double balanced_pos_weight(std::span<const BinaryMask> masks);

}  // namespace donn
