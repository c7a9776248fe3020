#include "clcnet/data.h"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <numbers>
#include <cstdio>
#include <ostream>
#include <utility>

#include "clcnet/fft.h"
#include "clcnet/wav.h"

namespace clcnet {
namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

uint64_t SplitMix64(uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

uint64_t DeriveSeed(uint64_t seed, uint64_t salt) {
  return SplitMix64(seed ^ SplitMix64(salt));
}

void ScalePeak(std::vector<double>& x, double peak) {
  double max_abs = 0.0;
  for (double v : x) max_abs = std::max(max_abs, std::abs(v));
  if (max_abs > 0.0) {
    const double g = peak / max_abs;
    for (double& v : x) v *= g;
  }
}

void ScaleRms(std::vector<double>& x, double rms) {
  double acc = 0.0;
  for (double v : x) acc += v * v;
  if (acc > 0.0) {
    const double g = rms / std::sqrt(acc / x.size());
    for (double& v : x) v *= g;
  }
}

struct Vowel {
  double f1, f2, f3;
};

constexpr Vowel kVowels[] = {
    {730, 1090, 2440}, {270, 2290, 3010}, {300, 870, 2240},
    {530, 1840, 2480}, {570, 840, 2410},  {660, 1720, 2410},
};

double FormantGain(double freq, const Vowel& v) {
  auto peak = [freq](double center, double bandwidth, double amp) {
    const double d = (freq - center) / bandwidth;
    return amp / (1.0 + d * d);
  };
  const double tilt = 1.0 / std::sqrt(1.0 + freq / 400.0);
  return tilt * (0.05 + peak(v.f1, 120.0, 1.0) + peak(v.f2, 160.0, 0.7) +
                 peak(v.f3, 220.0, 0.4));
}

struct Syllable {
  size_t start;
  size_t length;
  int vowel;
  double gain;
};

}  // namespace

const char* SplitName(Split split) {
  switch (split) {
    case Split::kTrain: return "train";
    case Split::kValidation: return "validation";
    case Split::kTest: return "test";
  }
  return "unknown";
}

Split ParseSplit(const std::string& name) {
  if (name == "train") return Split::kTrain;
  if (name == "validation" || name == "val") return Split::kValidation;
  if (name == "test") return Split::kTest;
  throw ConfigError("unknown split '" + name + "' (train|validation|test)");
}

const SplitIds& CorpusSplit::Get(Split split) const {
  switch (split) {
    case Split::kTrain: return train;
    case Split::kValidation: return validation;
    case Split::kTest: return test;
  }
  return train;
}

SplitIds& CorpusSplit::Get(Split split) {
  return const_cast<SplitIds&>(std::as_const(*this).Get(split));
}

void CorpusSplit::WriteCsv(std::ostream& os) const {
  os << "id,split\n";
  for (const bool speech : {true, false}) {
    for (Split s : {Split::kTrain, Split::kValidation, Split::kTest}) {
      std::vector<std::string> ids = speech ? Get(s).speech : Get(s).noise;
      std::sort(ids.begin(), ids.end());
      for (const std::string& id : ids) os << id << ',' << SplitName(s) << '\n';
    }
  }
}

size_t VadFrameLength(double sample_rate) {
  return std::max<size_t>(1, static_cast<size_t>(std::lround(0.02 * sample_rate)));
}

std::vector<bool> ActiveFrames(std::span<const double> speech,
                               double sample_rate, double threshold_db) {
  const size_t frame = VadFrameLength(sample_rate);
  const size_t frames = (speech.size() + frame - 1) / frame;
  std::vector<double> power(frames, 0.0);
  double peak = 0.0;
  for (size_t m = 0; m < frames; ++m) {
    const size_t end = std::min(speech.size(), (m + 1) * frame);
    double acc = 0.0;
    for (size_t i = m * frame; i < end; ++i) acc += speech[i] * speech[i];
    power[m] = acc / static_cast<double>(end - m * frame);
    peak = std::max(peak, power[m]);
  }
  const double floor = peak * std::pow(10.0, -threshold_db / 10.0);
  std::vector<bool> active(frames);
  for (size_t m = 0; m < frames; ++m) active[m] = peak > 0.0 && power[m] >= floor;
  return active;
}

double ActiveSpeechSnrDb(std::span<const double> speech,
                         std::span<const double> noise, double sample_rate) {
  if (speech.size() != noise.size()) {
    throw DataError("snr: speech and noise lengths differ");
  }
  const std::vector<bool> active = ActiveFrames(speech, sample_rate);
  const size_t frame = VadFrameLength(sample_rate);
  double ps = 0.0, pn = 0.0;
  for (size_t i = 0; i < speech.size(); ++i) {
    if (!active[i / frame]) continue;
    ps += speech[i] * speech[i];
    pn += noise[i] * noise[i];
  }
  if (!(ps > 0.0)) throw DataError("snr: speech signal is silent, SNR undefined");
  if (!(pn > 0.0)) throw DataError("snr: noise has no power in speech-active frames");
  return 10.0 * std::log10(ps / pn);
}

MixtureSpec SampleSpec(Rng& rng, const SplitIds& ids, const MixConfig& config) {
  if (ids.speech.empty() || ids.noise.empty()) {
    throw DataError("sample_spec: split needs at least one speech and one noise signal");
  }
  if (config.snr_set.empty() || config.offset_set.empty() || config.max_noises == 0) {
    throw ConfigError("sample_spec: empty SNR set, offset set or noise count");
  }
  MixtureSpec spec;
  spec.speech_id = ids.speech[rng.UniformInt(ids.speech.size())];
  const size_t max_count = std::min(config.max_noises, ids.noise.size());
  const size_t count = 1 + rng.UniformInt(max_count);
  std::vector<std::string> pool = ids.noise;
  for (size_t j = 0; j < count; ++j) {
    const size_t pick = j + rng.UniformInt(pool.size() - j);
    std::swap(pool[j], pool[pick]);
    spec.noise_ids.push_back(pool[j]);
    spec.level_offsets_db.push_back(
        config.offset_set[rng.UniformInt(config.offset_set.size())]);
  }
  spec.snr_db = config.snr_set[rng.UniformInt(config.snr_set.size())];
  spec.delta_snr_t_db = config.delta_snr_t_db;
  spec.seed = rng.NextU64();
  return spec;
}

Mixture MakeMixture(const MixtureSpec& spec, const Corpus& corpus) {
  auto speech_it = corpus.speech.find(spec.speech_id);
  if (speech_it == corpus.speech.end()) {
    throw DataError("mix: unknown speech id '" + spec.speech_id + "'");
  }
  if (spec.noise_ids.empty() || spec.noise_ids.size() != spec.level_offsets_db.size()) {
    throw DataError("mix: need one level offset per noise and at least one noise");
  }
  const Waveform& speech = speech_it->second;
  const size_t n = speech.size();
  const double rate = speech.sample_rate;
  Rng rng(spec.seed);

  std::vector<double> noise_sum(n, 0.0);
  for (size_t j = 0; j < spec.noise_ids.size(); ++j) {
    auto it = corpus.noise.find(spec.noise_ids[j]);
    if (it == corpus.noise.end()) {
      throw DataError("mix: unknown noise id '" + spec.noise_ids[j] + "'");
    }
    const std::vector<double>& src = it->second.samples;
    if (it->second.sample_rate != rate) {
      throw DataError("mix: noise '" + spec.noise_ids[j] + "' sample rate differs from speech");
    }
    if (src.empty()) throw DataError("mix: noise '" + spec.noise_ids[j] + "' is empty");
    const double gain = std::pow(10.0, spec.level_offsets_db[j] / 20.0);
    const size_t start = src.size() >= n ? rng.UniformInt(src.size() - n + 1)
                                         : rng.UniformInt(src.size());
    for (size_t i = 0; i < n; ++i) noise_sum[i] += gain * src[(start + i) % src.size()];
  }

  const double current_snr = ActiveSpeechSnrDb(speech.samples, noise_sum, rate);
  const double noise_gain = std::pow(10.0, (current_snr - spec.snr_db) / 20.0);
  const double residual_gain = std::pow(10.0, -spec.delta_snr_t_db / 20.0);

  Mixture mix;
  mix.clean = speech;
  mix.noise = Waveform(std::vector<double>(n), rate);
  mix.noisy = Waveform(std::vector<double>(n), rate);
  mix.target = Waveform(std::vector<double>(n), rate);
  double peak = 0.0;
  for (size_t i = 0; i < n; ++i) {
    const double v = noise_gain * noise_sum[i];
    mix.noise.samples[i] = v;
    mix.noisy.samples[i] = speech.samples[i] + v;
    peak = std::max(peak, std::abs(mix.noisy.samples[i]));
  }
  if (peak > 1.0) {
    const double g = 0.9 / peak;
    for (size_t i = 0; i < n; ++i) {
      mix.clean.samples[i] *= g;
      mix.noise.samples[i] *= g;
      mix.noisy.samples[i] = mix.clean.samples[i] + mix.noise.samples[i];
    }
  }
  for (size_t i = 0; i < n; ++i) {
    mix.target.samples[i] = mix.clean.samples[i] + mix.noise.samples[i] * residual_gain;
  }
  return mix;
}

Waveform SynthSpeech(uint64_t seed, double duration_s,
                     const SpeechSynthConfig& config) {
  if (!(duration_s > 0.0)) throw ConfigError("synth_speech: duration must be positive");
  if (!(config.f0_min_hz > 0.0) || config.f0_max_hz < config.f0_min_hz) {
    throw ConfigError("synth_speech: invalid f0 range");
  }
  const double rate = config.sample_rate;
  const size_t n = static_cast<size_t>(std::lround(duration_s * rate));
  Rng rng(DeriveSeed(seed, 0x5eec4));

  // Syllable plan: voiced segments separated by short gaps and longer pauses.
  std::vector<Syllable> plan;
  size_t t = static_cast<size_t>(rng.Uniform(0.05, 0.15) * rate);
  while (t < n) {
    Syllable s;
    s.start = t;
    s.length = static_cast<size_t>(rng.Uniform(0.12, 0.30) * rate);
    s.vowel = static_cast<int>(rng.UniformInt(std::size(kVowels)));
    s.gain = rng.Uniform(0.5, 1.0);
    plan.push_back(s);
    const double gap = rng.Uniform() < 0.3 ? rng.Uniform(0.15, 0.40)
                                           : rng.Uniform(0.02, 0.06);
    t += s.length + static_cast<size_t>(gap * rate);
  }

  const double glide_hz = rng.Uniform(0.3, 0.8);
  const double glide_phase = rng.Uniform(0.0, kTwoPi);
  const double tremolo_hz = rng.Uniform(3.0, 6.0);
  const double top_hz = std::min(8000.0, 0.45 * rate);
  const size_t harmonics = static_cast<size_t>(top_hz / config.f0_min_hz);
  std::vector<Complex> rotor0(harmonics + 1);
  for (Complex& r : rotor0) r = std::polar(1.0, rng.Uniform(0.0, kTwoPi));

  std::vector<double> out(n, 0.0);
  std::vector<double> amps(harmonics + 1, 0.0);
  const size_t ramp = static_cast<size_t>(0.025 * rate);
  // Harmonic amplitudes follow f0 and the vowel slowly; refresh them every
  // few samples.
  constexpr size_t kAmpRefresh = 16;
  double theta = 0.0;
  size_t seg = 0;
  size_t amp_seg = plan.size();
  for (size_t i = 0; i < n; ++i) {
    const double time = i / rate;
    const double f0 = config.f0_min_hz +
                      (config.f0_max_hz - config.f0_min_hz) *
                          (0.5 + 0.5 * std::sin(kTwoPi * glide_hz * time + glide_phase));
    theta += kTwoPi * f0 / rate;
    if (theta > kTwoPi) theta -= kTwoPi;
    while (seg < plan.size() && i >= plan[seg].start + plan[seg].length) ++seg;
    if (seg >= plan.size() || i < plan[seg].start) continue;
    const Syllable& s = plan[seg];
    const size_t pos = i - s.start;
    if (seg != amp_seg || pos % kAmpRefresh == 0) {
      amp_seg = seg;
      for (size_t h = 1; h <= harmonics; ++h) {
        const double freq = h * f0;
        double amp = freq < top_hz ? FormantGain(freq, kVowels[s.vowel]) : 0.0;
        if (freq < top_hz && freq > top_hz - 1000.0) {
          amp *= 0.5 + 0.5 * std::cos(std::numbers::pi * (freq - (top_hz - 1000.0)) / 1000.0);
        }
        amps[h] = amp;
      }
    }
    double env = s.gain;
    if (pos < ramp) env *= 0.5 - 0.5 * std::cos(std::numbers::pi * pos / ramp);
    if (s.length - pos < ramp) {
      env *= 0.5 - 0.5 * std::cos(std::numbers::pi * (s.length - pos) / ramp);
    }
    env *= 1.0 + 0.15 * std::sin(kTwoPi * tremolo_hz * time);
    // Harmonic h is Im(e^{j h theta} * rotor0[h]); powers by recursion.
    const Complex step = std::polar(1.0, theta);
    Complex power = step;
    double acc = 0.0;
    for (size_t h = 1; h <= harmonics && amps[h] != 0.0; ++h) {
      acc += amps[h] * (power * rotor0[h]).imag();
      power *= step;
    }
    out[i] = env * acc;
  }
  ScalePeak(out, 0.5);
  return Waveform(std::move(out), rate);
}

const char* NoiseKindName(NoiseKind kind) {
  switch (kind) {
    case NoiseKind::kWhite: return "white";
    case NoiseKind::kPink: return "pink";
    case NoiseKind::kBabble: return "babble";
    case NoiseKind::kHum: return "hum";
  }
  return "unknown";
}

NoiseKind ParseNoiseKind(const std::string& name) {
  if (name == "white") return NoiseKind::kWhite;
  if (name == "pink") return NoiseKind::kPink;
  if (name == "babble") return NoiseKind::kBabble;
  if (name == "hum") return NoiseKind::kHum;
  throw ConfigError("unknown noise kind '" + name + "' (white|pink|babble|hum)");
}

Waveform SynthNoise(uint64_t seed, double duration_s, NoiseKind kind,
                    double sample_rate) {
  if (!(duration_s > 0.0)) throw ConfigError("synth_noise: duration must be positive");
  const size_t n = static_cast<size_t>(std::lround(duration_s * sample_rate));
  Rng rng(DeriveSeed(seed, 0x401e5 + static_cast<uint64_t>(kind)));
  std::vector<double> out(n, 0.0);
  switch (kind) {
    case NoiseKind::kWhite: {
      for (double& v : out) v = 0.1 * rng.Normal();
      break;
    }
    case NoiseKind::kPink: {
      for (double& v : out) v = rng.Normal();
      const RealFft fft(n);
      std::vector<Complex> spec(fft.num_bins());
      fft.Forward(out, spec);
      spec[0] = 0.0;
      for (size_t k = 1; k < spec.size(); ++k) spec[k] /= std::sqrt(static_cast<double>(k));
      fft.Inverse(spec, out);
      ScaleRms(out, 0.1);
      break;
    }
    case NoiseKind::kBabble: {
      for (uint64_t s = 0; s < 8; ++s) {
        SpeechSynthConfig cfg;
        cfg.sample_rate = sample_rate;
        cfg.f0_min_hz = 85.0 + 20.0 * s;
        cfg.f0_max_hz = std::min(400.0, 125.0 + 30.0 * s);
        const Waveform talker = SynthSpeech(DeriveSeed(seed, 100 + s), duration_s, cfg);
        for (size_t i = 0; i < n; ++i) out[i] += talker.samples[i];
      }
      ScalePeak(out, 0.5);
      break;
    }
    case NoiseKind::kHum: {
      const double mod_hz = rng.Uniform(0.1, 0.5);
      const double mod_phase = rng.Uniform(0.0, kTwoPi);
      const double drift_hz = rng.Uniform(0.03, 0.1);
      std::vector<double> phases(21);
      for (double& p : phases) p = rng.Uniform(0.0, kTwoPi);
      for (size_t i = 0; i < n; ++i) {
        const double time = i / sample_rate;
        const double env = (0.6 + 0.4 * std::sin(kTwoPi * mod_hz * time + mod_phase)) *
                           (0.8 + 0.2 * std::sin(kTwoPi * drift_hz * time));
        double acc = 0.0;
        for (size_t h = 1; h <= 20; ++h) {
          acc += std::sin(kTwoPi * 50.0 * h * time + phases[h]) / h;
        }
        out[i] = env * acc;
      }
      ScalePeak(out, 0.5);
      break;
    }
  }
  return Waveform(std::move(out), sample_rate);
}

CorpusWithSplit MakeSyntheticCorpus(const SyntheticCorpusConfig& config) {
  if (config.noise_kinds.empty()) throw ConfigError("synthetic corpus: no noise kinds");
  CorpusWithSplit out;
  struct Group {
    Split split;
    size_t speech;
    size_t noise;
  };
  const Group groups[] = {
      {Split::kTrain, config.speech_train, config.noise_train},
      {Split::kValidation, config.speech_validation, config.noise_validation},
      {Split::kTest, config.speech_test, config.noise_test},
  };
  uint64_t serial = 0;
  for (const Group& g : groups) {
    SplitIds& ids = out.split.Get(g.split);
    const std::string tag = SplitName(g.split);
    for (size_t i = 0; i < g.speech; ++i) {
      char name[64];
      std::snprintf(name, sizeof(name), "speech_%s_%03zu", tag.c_str(), i);
      out.corpus.speech[name] =
          SynthSpeech(DeriveSeed(config.seed, ++serial), config.speech_seconds, config.speech);
      ids.speech.push_back(name);
    }
    for (size_t i = 0; i < g.noise; ++i) {
      const NoiseKind kind = config.noise_kinds[i % config.noise_kinds.size()];
      char name[64];
      std::snprintf(name, sizeof(name), "noise_%s_%03zu_%s", tag.c_str(), i,
                    NoiseKindName(kind));
      out.corpus.noise[name] = SynthNoise(DeriveSeed(config.seed, ++serial),
                                          config.noise_seconds, kind,
                                          config.speech.sample_rate);
      ids.noise.push_back(name);
    }
  }
  return out;
}

Split HashSplit(const std::string& id, double train_fraction,
                double validation_fraction) {
  const double u = static_cast<double>(Fnv1a64(id) % 1000000) / 1e6;
  if (u < train_fraction) return Split::kTrain;
  if (u < train_fraction + validation_fraction) return Split::kValidation;
  return Split::kTest;
}

CorpusWithSplit LoadCorpus(const std::string& root, double sample_rate,
                           double train_fraction, double validation_fraction) {
  namespace fs = std::filesystem;
  CorpusWithSplit out;
  for (const bool speech : {true, false}) {
    const fs::path dir = fs::path(root) / (speech ? "speech" : "noise");
    std::error_code ec;
    if (!fs::is_directory(dir, ec)) {
      throw DataError("corpus: missing directory " + dir.string());
    }
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(dir)) {
      if (entry.is_regular_file() && entry.path().extension() == ".wav") {
        files.push_back(entry.path());
      }
    }
    std::sort(files.begin(), files.end());
    if (files.empty()) throw DataError("corpus: no .wav files in " + dir.string());
    for (const fs::path& file : files) {
      const std::string id = file.stem().string();
      Waveform w = ReadWavStrict(file.string(), sample_rate);
      auto& target = speech ? out.corpus.speech : out.corpus.noise;
      if (target.count(id)) throw DataError("corpus: duplicate id '" + id + "'");
      target[id] = std::move(w);
      SplitIds& ids =
          out.split.Get(HashSplit(id, train_fraction, validation_fraction));
      (speech ? ids.speech : ids.noise).push_back(id);
    }
  }
  return out;
}

}  // namespace clcnet
