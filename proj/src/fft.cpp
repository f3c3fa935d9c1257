#include "fft.hpp"

#include <fftw3.h>

#include <map>
#include <mutex>
#include <new>
#include <stdexcept>
#include <utility>

namespace donn::detail {
namespace {

struct PlanKey {
  std::size_t n;
  int sign;
  int alignment;
  auto operator<=>(const PlanKey&) const = default;
};

// FFTW planning is not thread-safe; execution of an existing plan is.
class PlanCache {
 public:
  ~PlanCache() {
    for (auto& [key, plan] : plans_) fftw_destroy_plan(plan);
  }

  fftw_plan get(std::size_t n, int sign, fftw_complex* data) {
    const PlanKey key{n, sign, fftw_alignment_of(reinterpret_cast<double*>(data))};
    std::lock_guard lock(mutex_);
    if (auto it = plans_.find(key); it != plans_.end()) return it->second;
    // FFTW_ESTIMATE never touches the array and always picks the same algorithm.
    fftw_plan plan = fftw_plan_dft_2d(static_cast<int>(n), static_cast<int>(n), data, data, sign,
                                      FFTW_ESTIMATE);
    if (!plan) throw std::runtime_error("FFTW failed to create a plan");
    plans_.emplace(key, plan);
    return plan;
  }

 private:
  std::mutex mutex_;
  std::map<PlanKey, fftw_plan> plans_;
};

PlanCache& plan_cache() {
  static PlanCache cache;
  return cache;
}

void run(FftBuffer& buf, std::size_t n, int sign) {
  if (buf.size() != n * n) throw std::logic_error("fft2d: buffer size mismatch");
  auto* data = reinterpret_cast<fftw_complex*>(buf.data());
  fftw_execute_dft(plan_cache().get(n, sign, data), data, data);
}

}  // namespace

void* fft_alloc(std::size_t bytes) {
  void* p = fftw_malloc(bytes == 0 ? 1 : bytes);
  if (!p) throw std::bad_alloc();
  return p;
}

void fft_free(void* p) noexcept { fftw_free(p); }

void fft2d_forward(FftBuffer& buf, std::size_t n) { run(buf, n, FFTW_FORWARD); }
void fft2d_backward(FftBuffer& buf, std::size_t n) { run(buf, n, FFTW_BACKWARD); }

}  // namespace donn::detail
