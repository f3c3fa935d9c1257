#pragma once

#include <complex>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "donn/error.hpp"

namespace donn {

using cdouble = std::complex<double>;

/// Square sampling grid shared by every plane of the system.
struct GridSpec {
  std::size_t side_px = 0;
  double pitch_m = 0.0;
  double wavelength_m = 0.0;

  /// Validating constructor: side >= 2, pitch > 0, wavelength > 0.
  static GridSpec make(std::size_t side_px, double pitch_m, double wavelength_m);
  void validate() const;

  double aperture_m() const { return static_cast<double>(side_px) * pitch_m; }
  std::size_t pixels() const { return side_px * side_px; }
  double wavenumber() const;

  GridSpec with_side(std::size_t side) const;
  GridSpec with_wavelength(double wavelength) const;

  bool operator==(const GridSpec&) const = default;
};

/// Row-major square array.
template <class T>
class Array2D {
 public:
  Array2D() = default;
  explicit Array2D(std::size_t side, T fill = T{}) : side_(side), values_(side * side, fill) {}
  Array2D(std::size_t side, std::vector<T> values) : side_(side), values_(std::move(values)) {
    if (values_.size() != side_ * side_) {
      throw DimensionError("Array2D: " + std::to_string(values_.size()) + " values for side " +
                           std::to_string(side_));
    }
  }

  std::size_t side() const { return side_; }
  std::size_t size() const { return values_.size(); }

  T& operator()(std::size_t row, std::size_t col) { return values_[row * side_ + col]; }
  const T& operator()(std::size_t row, std::size_t col) const { return values_[row * side_ + col]; }
  T& operator[](std::size_t i) { return values_[i]; }
  const T& operator[](std::size_t i) const { return values_[i]; }

  std::span<T> values() { return values_; }
  std::span<const T> values() const { return values_; }
  const std::vector<T>& vector() const { return values_; }

  auto begin() { return values_.begin(); }
  auto end() { return values_.end(); }
  auto begin() const { return values_.begin(); }
  auto end() const { return values_.end(); }

  bool operator==(const Array2D&) const = default;

 private:
  std::size_t side_ = 0;
  std::vector<T> values_;
};

using RealImage = Array2D<double>;
/// Entries are 0 or 1.
using BinaryMask = Array2D<std::uint8_t>;

bool is_binary(const BinaryMask& mask);
void require_binary(const BinaryMask& mask, const char* what);

/// Sampled complex scalar wavefunction.
class ComplexField2D {
 public:
  ComplexField2D() = default;
  /// All-zero field.
  explicit ComplexField2D(const GridSpec& grid);
  /// Throws DimensionError on a shape mismatch and DomainError on non-finite entries.
  ComplexField2D(const GridSpec& grid, std::vector<cdouble> values);

  const GridSpec& grid() const { return grid_; }
  std::size_t side() const { return grid_.side_px; }

  cdouble& operator()(std::size_t row, std::size_t col) { return values_[row * grid_.side_px + col]; }
  cdouble operator()(std::size_t row, std::size_t col) const {
    return values_[row * grid_.side_px + col];
  }

  std::span<cdouble> values() { return values_; }
  std::span<const cdouble> values() const { return values_; }

  /// Sum of |f|^2 over the grid.
  double energy() const;
  bool all_finite() const;

 private:
  GridSpec grid_;
  std::vector<cdouble> values_;
};

/// Non-negative detector-plane intensity.
class IntensityMap {
 public:
  IntensityMap() = default;
  explicit IntensityMap(const GridSpec& grid);
  IntensityMap(const GridSpec& grid, std::vector<double> values);

  const GridSpec& grid() const { return grid_; }
  std::size_t side() const { return grid_.side_px; }

  double operator()(std::size_t row, std::size_t col) const {
    return values_[row * grid_.side_px + col];
  }
  std::span<const double> values() const { return values_; }

  double sum() const;
  double max() const;
  double min() const;

  bool operator==(const IntensityMap&) const = default;

 private:
  GridSpec grid_;
  std::vector<double> values_;
};

enum class AmplitudeEncoding {
  linear,  ///< amplitude = p, unmodulated intensity p^2
  sqrt,    ///< amplitude = sqrt(p), unmodulated intensity p
};

/// Encodes a [0,1] image as a zero-phase field.
ComplexField2D field_from_amplitude(const RealImage& img, const GridSpec& grid,
                                    AmplitudeEncoding encoding = AmplitudeEncoding::linear);

IntensityMap intensity(const ComplexField2D& f);

/// Coherent (complex) sum.
ComplexField2D add_fields(const ComplexField2D& a, const ComplexField2D& b);

ComplexField2D scale_field(const ComplexField2D& f, cdouble factor);

/// Incoherent sum of intensity maps.
IntensityMap add_intensities(std::span<const IntensityMap> parts);

void require_same_grid(const GridSpec& a, const GridSpec& b, const char* what);

}  // namespace donn
