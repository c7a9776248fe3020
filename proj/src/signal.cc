#include "clcnet/signal.h"

#include <cmath>

namespace clcnet {

void Waveform::Validate() const {
  if (!(sample_rate > 0.0) || !std::isfinite(sample_rate)) {
    throw DataError("waveform: sample rate must be positive");
  }
  for (size_t i = 0; i < samples.size(); ++i) {
    if (!std::isfinite(samples[i])) {
      throw DataError("waveform: non-finite sample at index " +
                      std::to_string(i));
    }
  }
}

Spectrogram::Spectrogram(size_t num_frames, size_t num_bins, size_t hop,
                         size_t frame_len, double sample_rate)
    : num_frames_(num_frames),
      num_bins_(num_bins),
      hop_(hop),
      frame_len_(frame_len),
      sample_rate_(sample_rate),
      data_(num_frames * num_bins) {}

bool Spectrogram::SameGeometry(const Spectrogram& other) const {
  return num_frames_ == other.num_frames_ && num_bins_ == other.num_bins_ &&
         hop_ == other.hop_ && frame_len_ == other.frame_len_ &&
         sample_rate_ == other.sample_rate_;
}

Spectrogram Spectrogram::ZerosLike() const {
  return Spectrogram(num_frames_, num_bins_, hop_, frame_len_, sample_rate_);
}

}  // namespace clcnet
