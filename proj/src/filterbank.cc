#include "clcnet/filterbank.h"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace clcnet {

FilterBank::FilterBank(size_t frame_len, double sample_rate)
    : frame_len_(frame_len), hop_(frame_len / 2), sample_rate_(sample_rate) {
  if (frame_len < 4 || frame_len % 2 != 0) {
    throw ConfigError("filterbank: frame length must be even and >= 4");
  }
  if (!(sample_rate > 0.0)) {
    throw ConfigError("filterbank: sample rate must be positive");
  }
  window_.resize(frame_len_);
  for (size_t n = 0; n < frame_len_; ++n) {
    const double hann =
        0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * n / frame_len_);
    window_[n] = std::sqrt(hann);
  }
  fft_ = std::make_shared<const RealFft>(frame_len_);
}

size_t FilterBank::NumFrames(size_t num_samples) const {
  if (num_samples < frame_len_) return 0;
  return (num_samples - frame_len_ + hop_ - 1) / hop_ + 1;
}

void FilterBank::AnalyzeFrame(std::span<const double> samples,
                              std::span<Complex> out) const {
  thread_local std::vector<double> windowed;
  windowed.resize(frame_len_);
  for (size_t n = 0; n < frame_len_; ++n) {
    windowed[n] = n < samples.size() ? samples[n] * window_[n] : 0.0;
  }
  fft_->Forward(windowed, out);
}

Spectrogram FilterBank::Analyze(const Waveform& w) const {
  if (w.sample_rate != sample_rate_) {
    throw ConfigError("filterbank: sample rate " +
                      FormatDouble(w.sample_rate) + " Hz does not match bank rate " +
                      FormatDouble(sample_rate_) + " Hz");
  }
  return Analyze(std::span<const double>(w.samples));
}

Spectrogram FilterBank::Analyze(std::span<const double> samples) const {
  const size_t frames = NumFrames(samples.size());
  if (frames == 0) {
    throw DataError("filterbank: signal of " + std::to_string(samples.size()) +
                    " samples is shorter than one frame; empty spectrogram");
  }
  Spectrogram spec(frames, num_bins(), hop_, frame_len_, sample_rate_);
  for (size_t k = 0; k < frames; ++k) {
    const size_t start = k * hop_;
    const size_t len = std::min(frame_len_, samples.size() - start);
    AnalyzeFrame(samples.subspan(start, len), spec.frame(k));
  }
  return spec;
}

void FilterBank::CheckGeometry(const Spectrogram& s) const {
  if (s.num_bins() != num_bins() || s.hop() != hop_ ||
      s.frame_len() != frame_len_ || s.sample_rate() != sample_rate_) {
    throw ConfigError(
        "filterbank: spectrogram geometry (bins=" + std::to_string(s.num_bins()) +
        ", hop=" + std::to_string(s.hop()) + ", frame_len=" +
        std::to_string(s.frame_len()) + ") does not match the bank (bins=" +
        std::to_string(num_bins()) + ", hop=" + std::to_string(hop_) +
        ", frame_len=" + std::to_string(frame_len_) + ")");
  }
}

void FilterBank::SynthesizeFrame(std::span<const Complex> bins,
                                 std::span<double> out) const {
  fft_->Inverse(bins, out);
  for (size_t n = 0; n < frame_len_; ++n) out[n] *= window_[n];
}

Waveform FilterBank::Synthesize(const Spectrogram& s,
                                size_t num_samples) const {
  CheckGeometry(s);
  const size_t full =
      s.num_frames() == 0 ? 0 : (s.num_frames() - 1) * hop_ + frame_len_;
  std::vector<double> out(std::max(full, num_samples), 0.0);
  std::vector<double> frame(frame_len_);
  for (size_t k = 0; k < s.num_frames(); ++k) {
    SynthesizeFrame(s.frame(k), frame);
    double* dst = out.data() + k * hop_;
    for (size_t n = 0; n < frame_len_; ++n) dst[n] += frame[n];
  }
  if (num_samples != 0) out.resize(num_samples);
  return Waveform(std::move(out), sample_rate_);
}

Spectrogram FilterBank::SynthesizeAdjoint(std::span<const double> grad_output,
                                          size_t num_frames) const {
  Spectrogram grad(num_frames, num_bins(), hop_, frame_len_, sample_rate_);
  std::vector<double> windowed(frame_len_);
  const double inv_n = 1.0 / static_cast<double>(frame_len_);
  for (size_t k = 0; k < num_frames; ++k) {
    const size_t start = k * hop_;
    for (size_t n = 0; n < frame_len_; ++n) {
      const size_t t = start + n;
      windowed[n] = t < grad_output.size() ? grad_output[t] * window_[n] : 0.0;
    }
    auto g = grad.frame(k);
    fft_->Forward(windowed, g);
    // Interior bins appear twice in the Hermitian inverse.
    for (size_t f = 0; f < num_bins(); ++f) {
      const bool edge = f == 0 || f == num_bins() - 1;
      g[f] *= (edge ? 1.0 : 2.0) * inv_n;
    }
  }
  return grad;
}

double FilterBank::SpectralEnergy(const Spectrogram& s) const {
  CheckGeometry(s);
  double energy = 0.0;
  for (size_t k = 0; k < s.num_frames(); ++k) {
    for (size_t f = 0; f < s.num_bins(); ++f) {
      const bool edge = f == 0 || f == s.num_bins() - 1;
      energy += (edge ? 1.0 : 2.0) * std::norm(s.at(k, f));
    }
  }
  return energy / static_cast<double>(frame_len_);
}

size_t AlgorithmicLatencySamples(int offset, const FilterBank& bank) {
  if (offset < -1) {
    throw ConfigError("algorithmic latency: offset must be >= -1, got " +
                      std::to_string(offset));
  }
  return bank.frame_len() + static_cast<size_t>(std::max(offset, 0)) * bank.hop();
}

double AlgorithmicLatencyMs(int offset, const FilterBank& bank) {
  return 1000.0 * static_cast<double>(AlgorithmicLatencySamples(offset, bank)) /
         bank.sample_rate();
}

StreamingAnalyzer::StreamingAnalyzer(const FilterBank& bank)
    : bank_(bank), buffer_(bank.frame_len(), 0.0) {}

void StreamingAnalyzer::Push(std::span<const double> samples,
                             std::vector<std::vector<Complex>>& frames) {
  const size_t n = bank_.frame_len();
  const size_t hop = bank_.hop();
  for (double x : samples) {
    buffer_[filled_++] = x;
    if (filled_ == n) {
      std::vector<Complex> frame(bank_.num_bins());
      bank_.AnalyzeFrame(buffer_, frame);
      frames.push_back(std::move(frame));
      ++frames_emitted_;
      std::copy(buffer_.begin() + hop, buffer_.end(), buffer_.begin());
      filled_ = n - hop;
    }
  }
}

StreamingSynthesizer::StreamingSynthesizer(const FilterBank& bank)
    : bank_(bank),
      overlap_(bank.frame_len(), 0.0),
      scratch_(bank.frame_len(), 0.0) {}

void StreamingSynthesizer::Push(std::span<const Complex> frame,
                                std::vector<double>& out) {
  const size_t n = bank_.frame_len();
  const size_t hop = bank_.hop();
  bank_.SynthesizeFrame(frame, scratch_);
  for (size_t i = 0; i < n; ++i) overlap_[i] += scratch_[i];
  out.insert(out.end(), overlap_.begin(), overlap_.begin() + hop);
  std::copy(overlap_.begin() + hop, overlap_.end(), overlap_.begin());
  std::fill(overlap_.end() - hop, overlap_.end(), 0.0);
}

}  // namespace clcnet
