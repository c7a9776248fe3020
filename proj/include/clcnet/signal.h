// Value types exchanged between the filter bank, the enhancement operators
// and the metrics.

#ifndef CLCNET_SIGNAL_H_
#define CLCNET_SIGNAL_H_

#include <span>
#include <vector>

#include "clcnet/common.h"

namespace clcnet {

inline constexpr double kDefaultSampleRate = 24000.0;

struct Waveform {
  std::vector<double> samples;
  double sample_rate = kDefaultSampleRate;

  Waveform() = default;
  explicit Waveform(std::vector<double> s, double rate = kDefaultSampleRate)
      : samples(std::move(s)), sample_rate(rate) {}

  size_t size() const { return samples.size(); }
  double seconds() const { return samples.size() / sample_rate; }

  // Throws DataError on non-positive rate or non-finite samples.
  void Validate() const;
};

// Frames x bins grid of complex values. Row-major: element (k, f) lives at
// k * num_bins + f.
class Spectrogram {
 public:
  Spectrogram() = default;
  Spectrogram(size_t num_frames, size_t num_bins, size_t hop, size_t frame_len,
              double sample_rate);

  size_t num_frames() const { return num_frames_; }
  size_t num_bins() const { return num_bins_; }
  size_t hop() const { return hop_; }
  size_t frame_len() const { return frame_len_; }
  double sample_rate() const { return sample_rate_; }

  // Bands the enhancement operates on: all bins except Nyquist.
  size_t num_processed_bins() const { return frame_len_ / 2; }

  Complex& at(size_t frame, size_t bin) { return data_[frame * num_bins_ + bin]; }
  const Complex& at(size_t frame, size_t bin) const {
    return data_[frame * num_bins_ + bin];
  }

  std::span<Complex> frame(size_t k) {
    return {data_.data() + k * num_bins_, num_bins_};
  }
  std::span<const Complex> frame(size_t k) const {
    return {data_.data() + k * num_bins_, num_bins_};
  }

  std::vector<Complex>& data() { return data_; }
  const std::vector<Complex>& data() const { return data_; }

  // Same frame count, bin count, hop, frame length and rate.
  bool SameGeometry(const Spectrogram& other) const;

  // Zero-valued spectrogram with identical geometry.
  Spectrogram ZerosLike() const;

 private:
  size_t num_frames_ = 0;
  size_t num_bins_ = 0;
  size_t hop_ = 0;
  size_t frame_len_ = 0;
  double sample_rate_ = kDefaultSampleRate;
  std::vector<Complex> data_;
};

}  // namespace clcnet

#endif  // CLCNET_SIGNAL_H_
