// RIFF/WAVE reading and writing for mono PCM 16-bit and IEEE float 32-bit.

#ifndef CLCNET_WAV_H_
#define CLCNET_WAV_H_

#include <string>

#include "clcnet/signal.h"

namespace clcnet {

enum class WavFormat { kPcm16, kFloat32 };

// Throws DataError for unreadable or malformed files, multi-channel audio and
// unsupported sample formats. WAVE_FORMAT_EXTENSIBLE with a PCM or float
// sub-format is accepted. PCM16 samples are scaled by 1/32768.
Waveform ReadWav(const std::string& path);

// Throws DataError if the file cannot be written. PCM16 output is clipped to
// [-1, 1) after scaling by 32768 and rounding.
void WriteWav(const std::string& path, const Waveform& w,
              WavFormat format = WavFormat::kFloat32);

// Reads and checks the sample rate; no resampling is ever applied.
Waveform ReadWavStrict(const std::string& path,
                       double expected_rate = kDefaultSampleRate);

}  // namespace clcnet

#endif  // CLCNET_WAV_H_
