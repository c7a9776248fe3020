// Complex linear coding on low-resolution spectrograms.
//
// The CLC operator forms, per processed band f and frame k,
//
//   S_hat(k, f) = sum_{i=0..N} A(k, i, f) * X(k - i + l, f)
//
// with order N and frame offset l (l = -1 is plain linear prediction, l >= 0
// uses the current and l future frames). Frames outside the spectrogram read
// as zero. The Nyquist bin is copied through untouched.
//
// Also here: the phase-preserving per-band normalization that feeds the
// coefficient predictor, and the oracle baselines (least-squares CLC
// coefficients, Wiener gains, IAM and cIRM).

#ifndef CLCNET_CLC_H_
#define CLCNET_CLC_H_

#include <span>
#include <vector>

#include "clcnet/signal.h"

namespace clcnet {

inline constexpr size_t kDefaultOrder = 5;
inline constexpr int kDefaultOffset = 1;

// frames x bins x (order + 1) complex coefficients. Element (k, i, f) lives at
// (k * bins + f) * (order + 1) + i, which matches the model's output layout.
class CoeffTensor {
 public:
  CoeffTensor() = default;
  CoeffTensor(size_t num_frames, size_t num_bins, size_t order, int offset);

  size_t num_frames() const { return num_frames_; }
  size_t num_bins() const { return num_bins_; }
  size_t order() const { return order_; }
  int offset() const { return offset_; }
  size_t taps() const { return order_ + 1; }

  Complex& at(size_t k, size_t i, size_t f) {
    return data_[(k * num_bins_ + f) * taps() + i];
  }
  const Complex& at(size_t k, size_t i, size_t f) const {
    return data_[(k * num_bins_ + f) * taps() + i];
  }
  // All coefficients of frame k, bins-major.
  std::span<Complex> frame(size_t k) {
    return {data_.data() + k * num_bins_ * taps(), num_bins_ * taps()};
  }
  std::span<const Complex> frame(size_t k) const {
    return {data_.data() + k * num_bins_ * taps(), num_bins_ * taps()};
  }
  std::vector<Complex>& data() { return data_; }
  const std::vector<Complex>& data() const { return data_; }

 private:
  size_t num_frames_ = 0;
  size_t num_bins_ = 0;
  size_t order_ = 0;
  int offset_ = 0;
  std::vector<Complex> data_;
};

// ---------------------------------------------------------------------------
// Normalization

struct NormConfig {
  // Exponential moving average time constant of the per-band mean |X|.
  double time_constant_s = 1.0;
  double epsilon = 1e-6;

  // Per-frame EMA decay exp(-hop_seconds / time_constant_s).
  double Decay(double hop_seconds) const;
};

// Running per-band mean magnitude. The accumulator follows
// m <- decay * m + (1 - decay) * |X| and is divided by (1 - decay^t) after t
// frames, so the estimate is unbiased from the first frame instead of
// starting at zero. The divisor is floored at epsilon. Causal: frame k only
// sees frames <= k.
class NormState {
 public:
  NormState() = default;
  NormState(size_t num_bins, double decay, double epsilon);

  // Folds one frame (at least num_bins values) into the estimate.
  void Update(std::span<const Complex> frame);
  // Current divisor for band f, >= epsilon.
  double Mu(size_t f) const;

  size_t num_bins() const { return accum_.size(); }
  size_t frames_seen() const { return frames_seen_; }
  double decay() const { return decay_; }
  double epsilon() const { return epsilon_; }

 private:
  std::vector<double> accum_;
  double decay_ = 0.0;
  double epsilon_ = 1e-6;
  double decay_power_ = 1.0;
  size_t frames_seen_ = 0;
};

struct NormGains {
  std::vector<double> gamma;

  NormGains() = default;
  explicit NormGains(size_t num_bins) : gamma(num_bins, 1.0) {}
};

// X_norm(k, f) = X(k, f) / mu(k, f) * gamma_f for the processed bands, where
// mu(k, f) is the divisor after folding in frame k. Only a real scale is
// applied, so the phase of each bin is untouched. The Nyquist bin is copied.
// If `divisors` is given it receives mu(k, f), frames x processed bins.
Spectrogram Normalize(const Spectrogram& x, NormState& state,
                      const NormGains& gains,
                      std::vector<double>* divisors = nullptr);

// ---------------------------------------------------------------------------
// CLC operator

// Requires a.num_bins() == x.num_processed_bins() and
// a.num_frames() <= x.num_frames(); frames of x beyond the coefficient range
// produce silence in the processed bands. Throws ConfigError otherwise.
Spectrogram ApplyClc(const Spectrogram& x, const CoeffTensor& a);

// Gradient of a real loss w.r.t. the coefficients given the gradient
// (dL/dRe + j dL/dIm) at the CLC output: dL/dA(k, i, f) = g(k, f) *
// conj(X(k - i + l, f)).
CoeffTensor ClcCoeffGradient(const Spectrogram& x,
                             const Spectrogram& grad_output, size_t order,
                             int offset, size_t num_frames);

// ---------------------------------------------------------------------------
// Oracles

struct OracleClcOptions {
  size_t order = kDefaultOrder;
  int offset = kDefaultOffset;
  // Frames in the least-squares window centered on each frame.
  size_t window = 9;
  // Tikhonov weight relative to the window energy sum_j |X(j, f)|^2. Zero
  // gives the minimum-norm least-squares solution.
  double ridge = 1e-6;
};

struct WindowFit {
  std::vector<Complex> coeffs;
  double residual = 0.0;  // sum over the window of |fit - target|^2
};

// Regularized complex least squares for one band and one window of frames
// [first, last]: minimizes sum_j |sum_i A_i x(j - i + l) - s(j)|^2 +
// lambda * |A|^2 with lambda = ridge * sum_j |x(j)|^2.
WindowFit FitClcWindow(std::span<const Complex> x, std::span<const Complex> s,
                       size_t first, size_t last, size_t order, int offset,
                       double ridge);

// Best single real gain g over the same window: minimizes
// sum_j |g * x(j) - s(j)|^2.
WindowFit FitRealGainWindow(std::span<const Complex> x,
                            std::span<const Complex> s, size_t first,
                            size_t last);

// Per-frame oracle coefficients fitted on a sliding window centered at each
// frame. Deterministic. Throws ConfigError on geometry mismatch.
CoeffTensor OracleClcCoeffs(const Spectrogram& noisy,
                            const Spectrogram& target,
                            const OracleClcOptions& options = {});

// frames x bins grid of real values (covers every stored bin).
struct RealMask {
  size_t num_frames = 0;
  size_t num_bins = 0;
  std::vector<double> values;

  double& at(size_t k, size_t f) { return values[k * num_bins + f]; }
  double at(size_t k, size_t f) const { return values[k * num_bins + f]; }
};

// G = |S|^2 / (|S|^2 + |N|^2) in [0, 1], with 0/0 defined as 0.
RealMask OracleWienerGain(const Spectrogram& speech, const Spectrogram& noise);

struct MaskOptions {
  double iam_cap = 10.0;
  double epsilon = 1e-6;
};

struct OracleMaskSet {
  RealMask iam;      // min(|S| / |M|, cap)
  Spectrogram cirm;  // S / M with |M| floored at epsilon
};

OracleMaskSet OracleMasks(const Spectrogram& speech, const Spectrogram& mixture,
                          const MaskOptions& options = {});

Spectrogram ApplyMask(const Spectrogram& x, const RealMask& mask);
Spectrogram ApplyComplexMask(const Spectrogram& x, const Spectrogram& mask);

}  // namespace clcnet

#endif  // CLCNET_CLC_H_
