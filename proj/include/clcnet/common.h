// Shared types for the clcnet library: complex alias, error hierarchy and a
// seeded random source with platform-independent distributions.

#ifndef CLCNET_COMMON_H_
#define CLCNET_COMMON_H_

#include <complex>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>

namespace clcnet {

using Complex = std::complex<double>;

// Base class of every error thrown by the library. The CLI maps the concrete
// subclasses to stable exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Invalid configuration, geometry mismatch or bad arguments (exit code 1).
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Unreadable, malformed or semantically invalid input data (exit code 2).
class DataError : public Error {
 public:
  using Error::Error;
};

// Non-finite values, degenerate or ill-conditioned numerics (exit code 3).
class NumericError : public Error {
 public:
  using Error::Error;
};

// mt19937_64 with hand-rolled distributions, so streams are bit-identical
// across standard library implementations.
class Rng {
 public:
  explicit Rng(uint64_t seed = 0) : engine_(seed) {}

  uint64_t NextU64() { return engine_(); }

  // Uniform in [0, 1) with 53 random bits.
  double Uniform() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  double Uniform(double lo, double hi) { return lo + (hi - lo) * Uniform(); }

  // Uniform integer in [0, n). Rejection sampling keeps it unbiased.
  uint64_t UniformInt(uint64_t n);

  // Standard normal via Box-Muller (no cached spare, so state is just the
  // engine).
  double Normal();

  std::string SaveState() const;
  void LoadState(const std::string& state);

  bool operator==(const Rng& other) const { return engine_ == other.engine_; }

 private:
  std::mt19937_64 engine_;
};

// 64-bit FNV-1a, used for stable id hashing.
uint64_t Fnv1a64(const std::string& text);

// Formats a double so that parsing it back yields the same bits.
std::string FormatDouble(double value);

}  // namespace clcnet

#endif  // CLCNET_COMMON_H_
