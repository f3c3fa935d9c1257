#pragma once

#include <cstddef>
#include <map>
#include <memory>
#include <mutex>
#include <span>
#include <tuple>
#include <vector>

#include "donn/field.hpp"

namespace donn {

enum class TransferFunction {
  /// Closed-form Fresnel transfer function, unit modulus.
  analytic_fresnel,
  /// DFT of the sampled (pitch^2 scaled) impulse response on the padded grid. With
  /// pad factor 2 this reproduces direct linear convolution exactly.
  sampled_impulse,
};

const char* to_string(TransferFunction kind);
TransferFunction transfer_function_from_string(const std::string& name);

/// Largest z for which the analytic transfer function is adequately sampled:
/// side * pitch^2 / lambda.
double critical_distance(const GridSpec& grid);

/// Spectral multiplier for one (grid, z, pad) triple. Immutable once built.
class PropagationKernel {
 public:
  const GridSpec& grid() const { return grid_; }
  double distance_m() const { return distance_m_; }
  int pad_factor() const { return pad_factor_; }
  TransferFunction kind() const { return kind_; }
  std::size_t padded_side() const { return grid_.side_px * static_cast<std::size_t>(pad_factor_); }
  /// Row-major padded_side^2 values in FFT frequency order.
  std::span<const cdouble> transfer() const { return transfer_; }
  bool exceeds_critical_distance() const { return distance_m_ > critical_distance(grid_); }

 private:
  friend PropagationKernel make_fresnel_kernel(const GridSpec&, double, int);
  friend PropagationKernel make_sampled_kernel(const GridSpec&, double, int);

  GridSpec grid_;
  double distance_m_ = 0.0;
  int pad_factor_ = 1;
  TransferFunction kind_ = TransferFunction::analytic_fresnel;
  std::vector<cdouble> transfer_;
};

/// H(nu) = exp(ikz) exp(-i pi lambda z |nu|^2). Warns when z exceeds critical_distance.
PropagationKernel make_fresnel_kernel(const GridSpec& grid, double z, int pad_factor = 2);
PropagationKernel make_sampled_kernel(const GridSpec& grid, double z, int pad_factor = 2);
PropagationKernel make_kernel(TransferFunction kind, const GridSpec& grid, double z, int pad_factor);

/// Free-space propagation: crop(iFFT(FFT(pad(f)) * H)).
ComplexField2D propagate(const ComplexField2D& f, const PropagationKernel& kernel);

/// Adjoint of propagate: the same pipeline with conj(H).
ComplexField2D propagate_adjoint(const ComplexField2D& f, const PropagationKernel& kernel);

/// Like propagate but returns the whole padded plane (no crop).
ComplexField2D propagate_padded(const ComplexField2D& f, const PropagationKernel& kernel);

/// Zero-pads f into the centre of a (pad_factor * side)^2 plane.
ComplexField2D pad_field(const ComplexField2D& f, int pad_factor);

/// pitch^2 * h(x, y, z) for the Fresnel impulse response h.
cdouble impulse_response(const GridSpec& grid, double z, double x_m, double y_m);

/// h sampled at x = (col - side/2) * pitch, y = (row - side/2) * pitch, scaled by pitch^2.
ComplexField2D sampled_impulse_response(const GridSpec& grid, double z);

inline constexpr std::size_t kDirectPropagationMaxSide = 64;

/// O(N^4) linear convolution with sampled_impulse_response; verification oracle.
ComplexField2D propagate_direct(const ComplexField2D& f, double z);

/// Shared, thread-safe kernel store keyed by (grid, z, pad, kind).
class KernelCache {
 public:
  std::shared_ptr<const PropagationKernel> get(const GridSpec& grid, double z, int pad_factor,
                                               TransferFunction kind);
  std::size_t size() const;

  static KernelCache& global();

 private:
  using Key = std::tuple<std::size_t, double, double, double, int, int>;
  mutable std::mutex mutex_;
  std::map<Key, std::shared_ptr<const PropagationKernel>> kernels_;
};

}  // namespace donn
