// Thin RAII wrapper over FFTW real-to-complex transforms.

#ifndef CLCNET_FFT_H_
#define CLCNET_FFT_H_

#include <memory>
#include <span>

#include "clcnet/common.h"

namespace clcnet {

// Real DFT of a fixed even or odd size n. Forward is unnormalized; Inverse
// scales by 1/n so Inverse(Forward(x)) == x. Plans are immutable after
// construction and Execute calls use caller-local scratch, so a single
// instance may be shared across threads.
class RealFft {
 public:
  explicit RealFft(size_t n);
  ~RealFft();
  RealFft(RealFft&& other) noexcept;
  RealFft& operator=(RealFft&& other) noexcept;
  RealFft(const RealFft&) = delete;
  RealFft& operator=(const RealFft&) = delete;

  size_t size() const { return n_; }
  size_t num_bins() const { return n_ / 2 + 1; }

  // out.size() must equal num_bins(), in.size() must equal size().
  void Forward(std::span<const double> in, std::span<Complex> out) const;
  // Imaginary parts of DC (and Nyquist for even n) are ignored.
  void Inverse(std::span<const Complex> in, std::span<double> out) const;

 private:
  struct Plans;
  size_t n_ = 0;
  std::unique_ptr<Plans> plans_;
};

}  // namespace clcnet

#endif  // CLCNET_FFT_H_
