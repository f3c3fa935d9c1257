#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "donn/loss.hpp"
#include "donn/model.hpp"

namespace donn {

/// Address of one phase parameter.
struct ParamCoord {
  std::size_t channel = 0;
  std::size_t layer = 0;  ///< 0-based
  std::size_t index = 0;  ///< row-major pixel index
};

/// dLoss/dtheta for every mask of a model, indexed [channel][layer][pixel].
struct GradientSet {
  std::array<std::vector<std::vector<double>>, kChannelCount> d_theta;

  static GradientSet zeros_like(const DonnModel& model);
  bool congruent(const DonnModel& model) const;
  bool congruent(const GradientSet& other) const;
  void add(const GradientSet& other);
  void scale(double factor);
  double max_abs() const;
  double at(const ParamCoord& p) const { return d_theta[p.channel][p.layer][p.index]; }
};

enum class AdjointMode {
  exact,
  /// Negative control for gradient checks: forgets to conjugate the transfer function.
  corrupted,
};

struct BackwardResult {
  double loss = 0.0;
  GradientSet grads;
  IntensityMap detector;
};

/// Loss of one sample through forward_rgb -> normalize_by_max -> loss.
double forward_loss(const DonnModel& model, const RgbFields& fields, const BinaryMask& gt,
                    const LossSpec& loss);

/// Reverse-mode gradient of forward_loss with respect to every phase value.
/// Throws NumericError (with the layer index) if a cotangent becomes non-finite.
BackwardResult backward(const DonnModel& model, const RgbFields& fields, const BinaryMask& gt,
                        const LossSpec& loss, AdjointMode mode = AdjointMode::exact);

inline constexpr std::size_t kMaxFiniteDiffCoords = 100;
inline constexpr double kFiniteDiffStep = 1e-5;

/// Central differences (L(theta + h) - L(theta - h)) / 2h at each coordinate.
std::vector<double> finite_diff_grad(const DonnModel& model, const RgbFields& fields,
                                     const BinaryMask& gt, const LossSpec& loss,
                                     std::span<const ParamCoord> coords, double step = kFiniteDiffStep);

/// Uniformly sampled distinct coordinates over all channels and layers.
std::vector<ParamCoord> sample_coords(const DonnModel& model, std::size_t count, std::uint64_t seed);

/// |a - b| / max(|a|, |b|, floor).
double relative_error(double a, double b, double floor);

}  // namespace donn
