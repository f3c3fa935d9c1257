#include "donn/propagation.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

#include "donn/log.hpp"
#include "fft.hpp"

namespace donn {
namespace {

void check_distance(double z, const char* what) {
  if (!(z > 0.0) || !std::isfinite(z)) {
    throw DomainError(std::string(what) + ": propagation distance must be > 0");
  }
}

void check_pad(int pad_factor) {
  if (pad_factor != 1 && pad_factor != 2) {
    throw UsageError("pad factor must be 1 or 2, got " + std::to_string(pad_factor));
  }
}

// Signed frequency index of FFT bin k on an n-point grid.
long signed_index(std::size_t k, std::size_t n) {
  const long kk = static_cast<long>(k);
  const long nn = static_cast<long>(n);
  return kk < (nn + 1) / 2 ? kk : kk - nn;
}

std::size_t pad_offset(std::size_t side, std::size_t padded) { return (padded - side) / 2; }

ComplexField2D run_spectral(const ComplexField2D& f, const PropagationKernel& kernel, bool adjoint,
                            bool crop) {
  require_same_grid(f.grid(), kernel.grid(), "propagate");
  const std::size_t n = f.side();
  const std::size_t m = kernel.padded_side();
  const std::size_t off = pad_offset(n, m);

  detail::FftBuffer buf(m * m);
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t c = 0; c < n; ++c) buf[(r + off) * m + c + off] = f(r, c);
  }
  detail::fft2d_forward(buf, m);
  const auto h = kernel.transfer();
  if (adjoint) {
    for (std::size_t i = 0; i < buf.size(); ++i) buf[i] *= std::conj(h[i]);
  } else {
    for (std::size_t i = 0; i < buf.size(); ++i) buf[i] *= h[i];
  }
  detail::fft2d_backward(buf, m);
  const double norm = 1.0 / static_cast<double>(m * m);

  if (!crop) {
    std::vector<cdouble> out(buf.size());
    for (std::size_t i = 0; i < buf.size(); ++i) out[i] = buf[i] * norm;
    return ComplexField2D(f.grid().with_side(m), std::move(out));
  }
  ComplexField2D out(f.grid());
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t c = 0; c < n; ++c) out(r, c) = buf[(r + off) * m + c + off] * norm;
  }
  return out;
}

}  // namespace

const char* to_string(TransferFunction kind) {
  switch (kind) {
    case TransferFunction::analytic_fresnel:
      return "analytic";
    case TransferFunction::sampled_impulse:
      return "sampled";
  }
  return "?";
}

TransferFunction transfer_function_from_string(const std::string& name) {
  if (name == "analytic") return TransferFunction::analytic_fresnel;
  if (name == "sampled") return TransferFunction::sampled_impulse;
  throw UsageError("unknown transfer function '" + name + "' (expected analytic|sampled)");
}

double critical_distance(const GridSpec& grid) {
  return static_cast<double>(grid.side_px) * grid.pitch_m * grid.pitch_m / grid.wavelength_m;
}

PropagationKernel make_fresnel_kernel(const GridSpec& grid, double z, int pad_factor) {
  grid.validate();
  check_distance(z, "make_fresnel_kernel");
  check_pad(pad_factor);

  PropagationKernel k;
  k.grid_ = grid;
  k.distance_m_ = z;
  k.pad_factor_ = pad_factor;
  k.kind_ = TransferFunction::analytic_fresnel;

  const std::size_t m = k.padded_side();
  const double dnu = 1.0 / (static_cast<double>(m) * grid.pitch_m);
  const cdouble carrier = std::polar(1.0, grid.wavenumber() * z);
  const double chirp = std::numbers::pi * grid.wavelength_m * z;

  std::vector<double> nu2(m);
  for (std::size_t i = 0; i < m; ++i) {
    const double nu = static_cast<double>(signed_index(i, m)) * dnu;
    nu2[i] = nu * nu;
  }
  k.transfer_.resize(m * m);
  for (std::size_t r = 0; r < m; ++r) {
    for (std::size_t c = 0; c < m; ++c) {
      k.transfer_[r * m + c] = carrier * std::polar(1.0, -chirp * (nu2[r] + nu2[c]));
    }
  }

  if (k.exceeds_critical_distance()) {
    std::ostringstream os;
    os << "propagation distance " << z << " m exceeds the critical sampling distance "
       << critical_distance(grid) << " m (side " << grid.side_px << ", pitch " << grid.pitch_m
       << " m); the transfer function is undersampled";
    warn(os.str());
  }
  return k;
}

cdouble impulse_response(const GridSpec& grid, double z, double x_m, double y_m) {
  const double k = grid.wavenumber();
  const cdouble carrier = std::polar(1.0, k * z);
  const cdouble prefactor = grid.pitch_m * grid.pitch_m / (cdouble(0.0, 1.0) * grid.wavelength_m * z);
  return carrier * prefactor * std::polar(1.0, k / (2.0 * z) * (x_m * x_m + y_m * y_m));
}

PropagationKernel make_sampled_kernel(const GridSpec& grid, double z, int pad_factor) {
  grid.validate();
  check_distance(z, "make_sampled_kernel");
  check_pad(pad_factor);

  PropagationKernel k;
  k.grid_ = grid;
  k.distance_m_ = z;
  k.pad_factor_ = pad_factor;
  k.kind_ = TransferFunction::sampled_impulse;

  const std::size_t m = k.padded_side();
  const long half = static_cast<long>(m / 2);
  detail::FftBuffer buf(m * m);
  for (std::size_t r = 0; r < m; ++r) {
    const long dr = static_cast<long>(r) < half ? static_cast<long>(r) : static_cast<long>(r) - static_cast<long>(m);
    for (std::size_t c = 0; c < m; ++c) {
      const long dc = static_cast<long>(c) < half ? static_cast<long>(c) : static_cast<long>(c) - static_cast<long>(m);
      buf[r * m + c] = impulse_response(grid, z, static_cast<double>(dc) * grid.pitch_m,
                                        static_cast<double>(dr) * grid.pitch_m);
    }
  }
  detail::fft2d_forward(buf, m);
  k.transfer_.assign(buf.begin(), buf.end());
  return k;
}

PropagationKernel make_kernel(TransferFunction kind, const GridSpec& grid, double z, int pad_factor) {
  return kind == TransferFunction::analytic_fresnel ? make_fresnel_kernel(grid, z, pad_factor)
                                                    : make_sampled_kernel(grid, z, pad_factor);
}

ComplexField2D propagate(const ComplexField2D& f, const PropagationKernel& kernel) {
  return run_spectral(f, kernel, false, true);
}

ComplexField2D propagate_adjoint(const ComplexField2D& f, const PropagationKernel& kernel) {
  return run_spectral(f, kernel, true, true);
}

ComplexField2D propagate_padded(const ComplexField2D& f, const PropagationKernel& kernel) {
  return run_spectral(f, kernel, false, false);
}

ComplexField2D pad_field(const ComplexField2D& f, int pad_factor) {
  check_pad(pad_factor);
  const std::size_t n = f.side();
  const std::size_t m = n * static_cast<std::size_t>(pad_factor);
  const std::size_t off = pad_offset(n, m);
  ComplexField2D out(f.grid().with_side(m));
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t c = 0; c < n; ++c) out(r + off, c + off) = f(r, c);
  }
  return out;
}

ComplexField2D sampled_impulse_response(const GridSpec& grid, double z) {
  grid.validate();
  check_distance(z, "sampled_impulse_response");
  const std::size_t n = grid.side_px;
  const double centre = static_cast<double>(n / 2);
  ComplexField2D h(grid);
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t c = 0; c < n; ++c) {
      h(r, c) = impulse_response(grid, z, (static_cast<double>(c) - centre) * grid.pitch_m,
                                 (static_cast<double>(r) - centre) * grid.pitch_m);
    }
  }
  return h;
}

ComplexField2D propagate_direct(const ComplexField2D& f, double z) {
  check_distance(z, "propagate_direct");
  const GridSpec& grid = f.grid();
  const std::size_t n = grid.side_px;
  if (n > kDirectPropagationMaxSide) {
    throw UsageError("propagate_direct: grid side " + std::to_string(n) + " exceeds " +
                     std::to_string(kDirectPropagationMaxSide));
  }
  // h for every offset in [-(n-1), n-1]^2.
  const std::size_t span = 2 * n - 1;
  const long shift = static_cast<long>(n) - 1;
  std::vector<cdouble> table(span * span);
  for (std::size_t i = 0; i < span; ++i) {
    for (std::size_t j = 0; j < span; ++j) {
      table[i * span + j] =
          impulse_response(grid, z, static_cast<double>(static_cast<long>(j) - shift) * grid.pitch_m,
                           static_cast<double>(static_cast<long>(i) - shift) * grid.pitch_m);
    }
  }
  ComplexField2D out(grid);
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t c = 0; c < n; ++c) {
      cdouble acc = 0.0;
      for (std::size_t r0 = 0; r0 < n; ++r0) {
        const std::size_t dr = r + n - 1 - r0;
        for (std::size_t c0 = 0; c0 < n; ++c0) {
          acc += f(r0, c0) * table[dr * span + (c + n - 1 - c0)];
        }
      }
      out(r, c) = acc;
    }
  }
  return out;
}

std::shared_ptr<const PropagationKernel> KernelCache::get(const GridSpec& grid, double z,
                                                          int pad_factor, TransferFunction kind) {
  const Key key{grid.side_px, grid.pitch_m, grid.wavelength_m, z, pad_factor, static_cast<int>(kind)};
  std::lock_guard lock(mutex_);
  if (auto it = kernels_.find(key); it != kernels_.end()) return it->second;
  auto kernel = std::make_shared<const PropagationKernel>(make_kernel(kind, grid, z, pad_factor));
  kernels_.emplace(key, kernel);
  return kernel;
}

std::size_t KernelCache::size() const {
  std::lock_guard lock(mutex_);
  return kernels_.size();
}

KernelCache& KernelCache::global() {
  static KernelCache cache;
  return cache;
}

}  // namespace donn
