// Corpus handling and noisy mixture generation.
//
// A mixture pairs one clean utterance with 1..4 simultaneous noises. Each
// noise is scaled by its level offset, the sum is scaled to hit the requested
// SNR over the speech-active frames, and the training target keeps the noise
// attenuated by delta_snr_t dB:
//
//   noisy  = clean + noise
//   target = clean + noise * 10^(-delta_snr_t / 20)

#ifndef CLCNET_DATA_H_
#define CLCNET_DATA_H_

#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "clcnet/signal.h"

namespace clcnet {

struct MixtureSpec {
  std::string speech_id;
  std::vector<std::string> noise_ids;
  double snr_db = 0.0;
  std::vector<double> level_offsets_db;  // one per noise
  double delta_snr_t_db = 14.0;
  uint64_t seed = 0;
};

struct MixConfig {
  std::vector<double> snr_set = {-100.0, -5.0, 0.0, 5.0, 10.0, 20.0};
  std::vector<double> offset_set = {-6.0, 0.0, 6.0};
  size_t max_noises = 4;
  double delta_snr_t_db = 14.0;
};

struct Corpus {
  std::map<std::string, Waveform> speech;
  std::map<std::string, Waveform> noise;
};

enum class Split { kTrain, kValidation, kTest };

const char* SplitName(Split split);
Split ParseSplit(const std::string& name);

struct SplitIds {
  std::vector<std::string> speech;
  std::vector<std::string> noise;
};

// Split at source-signal level: every id belongs to exactly one split.
struct CorpusSplit {
  SplitIds train;
  SplitIds validation;
  SplitIds test;

  const SplitIds& Get(Split split) const;
  SplitIds& Get(Split split);
  // CSV with header `id,split`, speech ids first, each group sorted.
  void WriteCsv(std::ostream& os) const;
};

struct Mixture {
  Waveform clean;
  Waveform noise;  // scaled noise actually added, noisy - clean
  Waveform noisy;
  Waveform target;
};

// Speech-active frames: 20 ms blocks whose energy is within `threshold_db` of
// the loudest block.
std::vector<bool> ActiveFrames(std::span<const double> speech,
                               double sample_rate, double threshold_db = 40.0);
size_t VadFrameLength(double sample_rate);

// 10 log10(P_speech / P_noise) over the speech-active frames of `speech`.
// Throws DataError when speech is silent or the noise has no power there.
double ActiveSpeechSnrDb(std::span<const double> speech,
                         std::span<const double> noise, double sample_rate);

// Draws noise count, noise ids (distinct), SNR and offsets uniformly.
// Throws DataError when the split has no speech or no noise.
MixtureSpec SampleSpec(Rng& rng, const SplitIds& ids, const MixConfig& config);

// Deterministic in (spec, corpus). Noise longer than the speech is cropped at
// a seeded offset, shorter noise is looped. If the noisy peak exceeds 1 all
// three outputs are scaled by the same factor to a 0.9 peak (SNR and the
// target relation are unaffected). Throws DataError for unknown ids, silent
// speech or silent noise.
Mixture MakeMixture(const MixtureSpec& spec, const Corpus& corpus);

// ---------------------------------------------------------------------------
// Synthetic signals

struct SpeechSynthConfig {
  double f0_min_hz = 85.0;
  double f0_max_hz = 125.0;
  double sample_rate = kDefaultSampleRate;
};

// Harmonic speech-like signal: f0 gliding inside [f0_min, f0_max], harmonics
// up to 8 kHz shaped by a moving three-formant envelope, syllable-rate
// amplitude modulation and pauses. Peak 0.5. With f0_max <= 125 Hz every
// 250 Hz analysis band holds at least two harmonics.
Waveform SynthSpeech(uint64_t seed, double duration_s,
                     const SpeechSynthConfig& config = {});

enum class NoiseKind { kWhite, kPink, kBabble, kHum };

const char* NoiseKindName(NoiseKind kind);
NoiseKind ParseNoiseKind(const std::string& name);

// white: Gaussian; pink: -3 dB/octave; babble: eight detuned speech streams;
// hum: 50 Hz with harmonics and slowly varying amplitude. Deterministic per
// seed.
Waveform SynthNoise(uint64_t seed, double duration_s, NoiseKind kind,
                    double sample_rate = kDefaultSampleRate);

struct SyntheticCorpusConfig {
  size_t speech_train = 24;
  size_t speech_validation = 4;
  size_t speech_test = 6;
  size_t noise_train = 8;
  size_t noise_validation = 4;
  size_t noise_test = 4;
  double speech_seconds = 3.0;
  double noise_seconds = 4.0;
  std::vector<NoiseKind> noise_kinds = {NoiseKind::kWhite, NoiseKind::kPink,
                                        NoiseKind::kBabble, NoiseKind::kHum};
  SpeechSynthConfig speech;
  uint64_t seed = 1;
};

struct CorpusWithSplit {
  Corpus corpus;
  CorpusSplit split;
};

CorpusWithSplit MakeSyntheticCorpus(const SyntheticCorpusConfig& config);

// Reads <root>/speech/*.wav and <root>/noise/*.wav (mono, strict sample
// rate). Ids are file stems; each id is assigned to train/validation/test by
// its FNV-1a hash with the given fractions, so membership does not depend on
// directory order. Throws DataError for a missing or empty directory or an
// unreadable file.
CorpusWithSplit LoadCorpus(const std::string& root,
                           double sample_rate = kDefaultSampleRate,
                           double train_fraction = 0.70,
                           double validation_fraction = 0.15);

Split HashSplit(const std::string& id, double train_fraction,
                double validation_fraction);

}  // namespace clcnet

#endif  // CLCNET_DATA_H_
