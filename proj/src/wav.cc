#include "clcnet/wav.h"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <vector>

namespace clcnet {
namespace {

static_assert(std::endian::native == std::endian::little,
              "WAV I/O assumes a little-endian host");

constexpr uint16_t kFormatPcm = 1;
constexpr uint16_t kFormatFloat = 3;
constexpr uint16_t kFormatExtensible = 0xFFFE;

template <typename T>
T Load(const uint8_t* p) {
  T v;
  std::memcpy(&v, p, sizeof(T));
  return v;
}

template <typename T>
void Store(std::vector<uint8_t>& out, T v) {
  const auto* p = reinterpret_cast<const uint8_t*>(&v);
  out.insert(out.end(), p, p + sizeof(T));
}

}  // namespace

Waveform ReadWav(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("wav: cannot open " + path);
  std::vector<uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                             std::istreambuf_iterator<char>());
  auto fail = [&](const std::string& why) {
    return DataError("wav: " + path + ": " + why);
  };
  if (bytes.size() < 12 || std::memcmp(bytes.data(), "RIFF", 4) != 0 ||
      std::memcmp(bytes.data() + 8, "WAVE", 4) != 0) {
    throw fail("not a RIFF/WAVE file");
  }
  uint16_t format = 0, channels = 0, bits = 0;
  uint32_t rate = 0;
  bool have_fmt = false;
  const uint8_t* data = nullptr;
  size_t data_size = 0;
  size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    const uint8_t* chunk = bytes.data() + pos;
    const uint32_t size = Load<uint32_t>(chunk + 4);
    const size_t body = pos + 8;
    const size_t available = bytes.size() - body;
    if (std::memcmp(chunk, "fmt ", 4) == 0) {
      if (size < 16 || size > available) throw fail("truncated fmt chunk");
      format = Load<uint16_t>(chunk + 8);
      channels = Load<uint16_t>(chunk + 10);
      rate = Load<uint32_t>(chunk + 12);
      bits = Load<uint16_t>(chunk + 22);
      if (format == kFormatExtensible) {
        if (size < 40) throw fail("truncated extensible fmt chunk");
        format = Load<uint16_t>(chunk + 8 + 24);
      }
      have_fmt = true;
    } else if (std::memcmp(chunk, "data", 4) == 0) {
      data = chunk + 8;
      data_size = std::min<size_t>(size, available);
      break;
    }
    pos = body + size + (size & 1);
  }
  if (!have_fmt) throw fail("missing fmt chunk");
  if (!data) throw fail("missing data chunk");
  if (channels != 1) {
    throw fail("expected mono audio, found " + std::to_string(channels) +
               " channels");
  }
  Waveform w;
  w.sample_rate = rate;
  if (format == kFormatPcm && bits == 16) {
    const size_t n = data_size / 2;
    w.samples.resize(n);
    for (size_t i = 0; i < n; ++i) {
      w.samples[i] = Load<int16_t>(data + 2 * i) / 32768.0;
    }
  } else if (format == kFormatFloat && bits == 32) {
    const size_t n = data_size / 4;
    w.samples.resize(n);
    for (size_t i = 0; i < n; ++i) w.samples[i] = Load<float>(data + 4 * i);
  } else {
    throw fail("unsupported sample format (format tag " + std::to_string(format) +
               ", " + std::to_string(bits) + " bits)");
  }
  if (rate == 0) throw fail("zero sample rate");
  return w;
}

Waveform ReadWavStrict(const std::string& path, double expected_rate) {
  Waveform w = ReadWav(path);
  if (w.sample_rate != expected_rate) {
    throw DataError("wav: " + path + ": sample rate " +
                    FormatDouble(w.sample_rate) + " Hz, expected " +
                    FormatDouble(expected_rate) + " Hz (no implicit resampling)");
  }
  w.Validate();
  return w;
}

void WriteWav(const std::string& path, const Waveform& w, WavFormat format) {
  const bool is_float = format == WavFormat::kFloat32;
  const uint16_t bits = is_float ? 32 : 16;
  const uint16_t block = bits / 8;
  const uint32_t rate = static_cast<uint32_t>(std::lround(w.sample_rate));
  const uint32_t data_bytes = static_cast<uint32_t>(w.samples.size() * block);

  std::vector<uint8_t> out;
  out.reserve(44 + data_bytes);
  out.insert(out.end(), {'R', 'I', 'F', 'F'});
  Store<uint32_t>(out, 36 + data_bytes);
  out.insert(out.end(), {'W', 'A', 'V', 'E', 'f', 'm', 't', ' '});
  Store<uint32_t>(out, 16);
  Store<uint16_t>(out, is_float ? kFormatFloat : kFormatPcm);
  Store<uint16_t>(out, 1);
  Store<uint32_t>(out, rate);
  Store<uint32_t>(out, rate * block);
  Store<uint16_t>(out, block);
  Store<uint16_t>(out, bits);
  out.insert(out.end(), {'d', 'a', 't', 'a'});
  Store<uint32_t>(out, data_bytes);
  for (double x : w.samples) {
    if (is_float) {
      Store<float>(out, static_cast<float>(x));
    } else {
      const double scaled = std::round(x * 32768.0);
      Store<int16_t>(out, static_cast<int16_t>(std::clamp(scaled, -32768.0, 32767.0)));
    }
  }
  std::ofstream file(path, std::ios::binary);
  if (!file) throw DataError("wav: cannot write " + path);
  file.write(reinterpret_cast<const char*>(out.data()),
             static_cast<std::streamsize>(out.size()));
  if (!file) throw DataError("wav: write failed for " + path);
}

}  // namespace clcnet
