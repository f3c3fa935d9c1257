#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

namespace donn::detail {

void* fft_alloc(std::size_t bytes);
void fft_free(void* p) noexcept;

/// Allocator giving FFTW's preferred SIMD alignment, so every buffer maps to one plan.
template <class T>
struct FftAllocator {
  using value_type = T;
  FftAllocator() = default;
  template <class U>
  FftAllocator(const FftAllocator<U>&) noexcept {}
  T* allocate(std::size_t n) { return static_cast<T*>(fft_alloc(n * sizeof(T))); }
  void deallocate(T* p, std::size_t) noexcept { fft_free(p); }
  template <class U>
  bool operator==(const FftAllocator<U>&) const noexcept { return true; }
};

using FftBuffer = std::vector<std::complex<double>, FftAllocator<std::complex<double>>>;

// In-place n x n transforms. The inverse is unnormalized (caller divides by n^2).
void fft2d_forward(FftBuffer& buf, std::size_t n);
void fft2d_backward(FftBuffer& buf, std::size_t n);

}  // namespace donn::detail
