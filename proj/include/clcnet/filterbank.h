// Analysis/synthesis filter bank producing the low-resolution complex
// spectrogram the enhancement runs on.
//
// The bank is a 50%-overlap STFT with a square-root periodic Hann window used
// for both analysis and synthesis. The squared window satisfies the
// constant-overlap-add condition at hop = frame_len / 2, so the pair
// reconstructs perfectly wherever a sample is covered by two frames. With the
// default 96-sample frame at 24 kHz this gives 49 stored bins (DC..Nyquist),
// 48 processed bands of 250 Hz spacing and a 2 ms hop.
//
// Frame k covers samples [k * hop, k * hop + frame_len). A trailing partial
// frame is zero padded.

#ifndef CLCNET_FILTERBANK_H_
#define CLCNET_FILTERBANK_H_

#include <memory>
#include <span>
#include <vector>

#include "clcnet/fft.h"
#include "clcnet/signal.h"

namespace clcnet {

inline constexpr size_t kDefaultFrameLen = 96;
inline constexpr size_t kDefaultHop = kDefaultFrameLen / 2;

class FilterBank {
 public:
  explicit FilterBank(size_t frame_len = kDefaultFrameLen,
                      double sample_rate = kDefaultSampleRate);

  size_t frame_len() const { return frame_len_; }
  size_t hop() const { return hop_; }
  size_t num_bins() const { return frame_len_ / 2 + 1; }
  size_t num_processed_bins() const { return frame_len_ / 2; }
  double sample_rate() const { return sample_rate_; }
  double hop_ms() const { return 1000.0 * hop_ / sample_rate_; }
  std::span<const double> window() const { return window_; }

  // Frames needed to cover num_samples (0 if shorter than one frame).
  size_t NumFrames(size_t num_samples) const;

  // Throws ConfigError on a sample-rate mismatch and DataError when the
  // signal is shorter than one frame.
  Spectrogram Analyze(const Waveform& w) const;
  Spectrogram Analyze(std::span<const double> samples) const;

  // Overlap-add synthesis. num_samples == 0 means the full span
  // (frames - 1) * hop + frame_len; otherwise the output is truncated or
  // zero-extended to num_samples. Throws ConfigError if the spectrogram was
  // not produced with this geometry.
  Waveform Synthesize(const Spectrogram& s, size_t num_samples = 0) const;

  // Adjoint of Synthesize: given dL/dy for the output samples, returns
  // dL/dRe + j dL/dIm for every spectrogram value.
  Spectrogram SynthesizeAdjoint(std::span<const double> grad_output,
                                size_t num_frames) const;

  // Synthesis of a single frame: windowed inverse transform, frame_len
  // samples, before overlap-add.
  void SynthesizeFrame(std::span<const Complex> bins,
                       std::span<double> out) const;
  void AnalyzeFrame(std::span<const double> samples,
                    std::span<Complex> out) const;

  // Bin-weighted energy (1/N) * sum c_f |X|^2, c_f = 2 except for DC and
  // Nyquist. Equals the signal energy for signals that are zero within one
  // frame of either edge.
  double SpectralEnergy(const Spectrogram& s) const;

  void CheckGeometry(const Spectrogram& s) const;

 private:
  size_t frame_len_;
  size_t hop_;
  double sample_rate_;
  std::vector<double> window_;
  std::shared_ptr<const RealFft> fft_;
};

// Delay from frame length plus lookahead frames, in milliseconds:
// (frame_len + max(l, 0) * hop) / sample_rate * 1000. Six milliseconds for the
// default bank at l = 1. Throws ConfigError for l < -1.
double AlgorithmicLatencyMs(int offset, const FilterBank& bank = FilterBank());
size_t AlgorithmicLatencySamples(int offset,
                                 const FilterBank& bank = FilterBank());

// Frame-at-a-time analysis. Push samples in blocks of any size; a frame is
// emitted as soon as its last sample has arrived.
class StreamingAnalyzer {
 public:
  explicit StreamingAnalyzer(const FilterBank& bank);

  // Appends all frames completed by these samples to `frames`.
  void Push(std::span<const double> samples,
            std::vector<std::vector<Complex>>& frames);
  size_t frames_emitted() const { return frames_emitted_; }

 private:
  FilterBank bank_;
  std::vector<double> buffer_;
  size_t filled_ = 0;
  size_t frames_emitted_ = 0;
};

// Frame-at-a-time overlap-add. Each pushed frame k finalizes the hop samples
// [k * hop, (k + 1) * hop).
class StreamingSynthesizer {
 public:
  explicit StreamingSynthesizer(const FilterBank& bank);

  void Push(std::span<const Complex> frame, std::vector<double>& out);

 private:
  FilterBank bank_;
  std::vector<double> overlap_;
  std::vector<double> scratch_;
};

}  // namespace clcnet

#endif  // CLCNET_FILTERBANK_H_
