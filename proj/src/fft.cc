#include "clcnet/fft.h"

#include <fftw3.h>

#include <mutex>
#include <vector>

namespace clcnet {
namespace {

// FFTW's planner is not reentrant.
std::mutex& PlannerMutex() {
  static std::mutex mutex;
  return mutex;
}

}  // namespace

struct RealFft::Plans {
  fftw_plan forward = nullptr;
  fftw_plan inverse = nullptr;
  ~Plans() {
    std::lock_guard<std::mutex> lock(PlannerMutex());
    if (forward) fftw_destroy_plan(forward);
    if (inverse) fftw_destroy_plan(inverse);
  }
};

RealFft::RealFft(size_t n) : n_(n), plans_(std::make_unique<Plans>()) {
  if (n == 0) throw ConfigError("RealFft: size must be positive");
  std::vector<double> real(n);
  std::vector<Complex> spec(num_bins());
  auto* spec_ptr = reinterpret_cast<fftw_complex*>(spec.data());
  // Unaligned plans let Forward/Inverse run on arbitrary caller buffers.
  const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
  std::lock_guard<std::mutex> lock(PlannerMutex());
  plans_->forward = fftw_plan_dft_r2c_1d(static_cast<int>(n), real.data(),
                                         spec_ptr, flags);
  plans_->inverse = fftw_plan_dft_c2r_1d(static_cast<int>(n), spec_ptr,
                                         real.data(), flags | FFTW_DESTROY_INPUT);
}

RealFft::~RealFft() = default;
RealFft::RealFft(RealFft&& other) noexcept = default;
RealFft& RealFft::operator=(RealFft&& other) noexcept = default;

void RealFft::Forward(std::span<const double> in,
                      std::span<Complex> out) const {
  // Out-of-place r2c leaves the input untouched.
  fftw_execute_dft_r2c(plans_->forward, const_cast<double*>(in.data()),
                       reinterpret_cast<fftw_complex*>(out.data()));
}

void RealFft::Inverse(std::span<const Complex> in,
                      std::span<double> out) const {
  thread_local std::vector<Complex> scratch;
  scratch.assign(in.begin(), in.begin() + num_bins());
  scratch[0].imag(0.0);
  if (n_ % 2 == 0) scratch[n_ / 2].imag(0.0);
  fftw_execute_dft_c2r(plans_->inverse,
                       reinterpret_cast<fftw_complex*>(scratch.data()),
                       out.data());
  const double scale = 1.0 / static_cast<double>(n_);
  for (size_t i = 0; i < n_; ++i) out[i] *= scale;
}

}  // namespace clcnet
