#include "donn/field.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

namespace donn {

GridSpec GridSpec::make(std::size_t side_px, double pitch_m, double wavelength_m) {
  GridSpec g{side_px, pitch_m, wavelength_m};
  g.validate();
  return g;
}

void GridSpec::validate() const {
  if (side_px < 2) throw DomainError("grid side must be >= 2, got " + std::to_string(side_px));
  if (!(pitch_m > 0.0) || !std::isfinite(pitch_m)) throw DomainError("pixel pitch must be > 0");
  if (!(wavelength_m > 0.0) || !std::isfinite(wavelength_m)) {
    throw DomainError("wavelength must be > 0");
  }
}

double GridSpec::wavenumber() const { return 2.0 * std::numbers::pi / wavelength_m; }

GridSpec GridSpec::with_side(std::size_t side) const {
  return make(side, pitch_m, wavelength_m);
}

GridSpec GridSpec::with_wavelength(double wavelength) const {
  return make(side_px, pitch_m, wavelength);
}

bool is_binary(const BinaryMask& mask) {
  return std::all_of(mask.begin(), mask.end(), [](std::uint8_t v) { return v <= 1; });
}

void require_binary(const BinaryMask& mask, const char* what) {
  if (!is_binary(mask)) throw DomainError(std::string(what) + ": mask entries must be 0 or 1");
}

void require_same_grid(const GridSpec& a, const GridSpec& b, const char* what) {
  if (a == b) return;
  std::ostringstream os;
  os << what << ": grid mismatch (" << a.side_px << " px @ " << a.pitch_m << " m, lambda "
     << a.wavelength_m << " vs " << b.side_px << " px @ " << b.pitch_m << " m, lambda "
     << b.wavelength_m << ")";
  throw DimensionError(os.str());
}

ComplexField2D::ComplexField2D(const GridSpec& grid) : grid_(grid), values_(grid.pixels()) {}

ComplexField2D::ComplexField2D(const GridSpec& grid, std::vector<cdouble> values)
    : grid_(grid), values_(std::move(values)) {
  if (values_.size() != grid_.pixels()) {
    throw DimensionError("ComplexField2D: " + std::to_string(values_.size()) +
                         " values for a " + std::to_string(grid_.side_px) + "^2 grid");
  }
  if (!all_finite()) throw DomainError("ComplexField2D: non-finite entry");
}

double ComplexField2D::energy() const {
  double e = 0.0;
  for (const auto& v : values_) e += std::norm(v);
  return e;
}

bool ComplexField2D::all_finite() const {
  return std::all_of(values_.begin(), values_.end(), [](const cdouble& v) {
    return std::isfinite(v.real()) && std::isfinite(v.imag());
  });
}

IntensityMap::IntensityMap(const GridSpec& grid) : grid_(grid), values_(grid.pixels(), 0.0) {}

IntensityMap::IntensityMap(const GridSpec& grid, std::vector<double> values)
    : grid_(grid), values_(std::move(values)) {
  if (values_.size() != grid_.pixels()) {
    throw DimensionError("IntensityMap: " + std::to_string(values_.size()) + " values for a " +
                         std::to_string(grid_.side_px) + "^2 grid");
  }
  for (double v : values_) {
    if (!std::isfinite(v) || v < 0.0) throw DomainError("IntensityMap: entries must be finite and >= 0");
  }
}

double IntensityMap::sum() const {
  double s = 0.0;
  for (double v : values_) s += v;
  return s;
}

double IntensityMap::max() const { return *std::max_element(values_.begin(), values_.end()); }
double IntensityMap::min() const { return *std::min_element(values_.begin(), values_.end()); }

ComplexField2D field_from_amplitude(const RealImage& img, const GridSpec& grid,
                                    AmplitudeEncoding encoding) {
  if (img.side() != grid.side_px) {
    throw DimensionError("field_from_amplitude: image side " + std::to_string(img.side()) +
                         " != grid side " + std::to_string(grid.side_px));
  }
  std::vector<cdouble> values(img.size());
  for (std::size_t i = 0; i < img.size(); ++i) {
    const double p = img[i];
    if (!(p >= 0.0 && p <= 1.0)) {
      throw DomainError("field_from_amplitude: pixel " + std::to_string(i) + " = " +
                        std::to_string(p) + " outside [0,1]");
    }
    values[i] = encoding == AmplitudeEncoding::sqrt ? std::sqrt(p) : p;
  }
  return ComplexField2D(grid, std::move(values));
}

IntensityMap intensity(const ComplexField2D& f) {
  std::vector<double> out(f.values().size());
  std::transform(f.values().begin(), f.values().end(), out.begin(),
                 [](const cdouble& v) { return v.real() * v.real() + v.imag() * v.imag(); });
  return IntensityMap(f.grid(), std::move(out));
}

ComplexField2D add_fields(const ComplexField2D& a, const ComplexField2D& b) {
  require_same_grid(a.grid(), b.grid(), "add_fields");
  ComplexField2D out(a.grid());
  auto dst = out.values();
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] = a.values()[i] + b.values()[i];
  return out;
}

ComplexField2D scale_field(const ComplexField2D& f, cdouble factor) {
  ComplexField2D out(f.grid());
  auto dst = out.values();
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] = f.values()[i] * factor;
  return out;
}

IntensityMap add_intensities(std::span<const IntensityMap> parts) {
  if (parts.empty()) throw UsageError("add_intensities: empty list");
  const GridSpec& grid = parts.front().grid();
  std::vector<double> sum(grid.pixels(), 0.0);
  for (const auto& part : parts) {
    require_same_grid(grid, part.grid(), "add_intensities");
    for (std::size_t i = 0; i < sum.size(); ++i) sum[i] += part.values()[i];
  }
  return IntensityMap(grid, std::move(sum));
}

}  // namespace donn
