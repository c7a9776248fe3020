// Time-domain losses and objective speech metrics.

#ifndef CLCNET_METRICS_H_
#define CLCNET_METRICS_H_

#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "clcnet/signal.h"

namespace clcnet {

inline constexpr double kSiSdrCapDb = 100.0;

// sqrt(mean((ref - est)^2)). Throws DataError on length mismatch or empty
// input.
double Rmse(std::span<const double> ref, std::span<const double> est);

// Scale-invariant SDR in dB, clamped to [-cap, cap]. An exact match (zero
// distortion) returns cap. Throws DataError on length mismatch or an all-zero
// reference.
double SiSdr(std::span<const double> ref, std::span<const double> est,
             double cap_db = kSiSdrCapDb);

// Polyphase windowed-sinc resampler by the rational factor up / down
// (Kaiser window, beta 5, ten zero crossings per side at the lower of the two
// rates, zero delay). Output length ceil(n * up / down).
std::vector<double> ResamplePoly(std::span<const double> x, size_t up,
                                 size_t down);

// Short-time objective intelligibility of `est` against the clean `ref`.
// Input is resampled to 10 kHz, silent frames (40 dB below the loudest
// reference frame) are dropped, 15 one-third octave bands from 150 Hz are
// taken from a 512-point DFT of 256-sample Hann frames, and banded envelopes
// are correlated over 30-frame (384 ms) segments after normalization and
// clipping at -15 dB SDR. Throws DataError when fewer than 30 frames remain or
// the reference is silent.
double Stoi(std::span<const double> ref, std::span<const double> est,
            double sample_rate);
inline double Stoi(const Waveform& ref, const Waveform& est) {
  return Stoi(ref.samples, est.samples, ref.sample_rate);
}

// ---------------------------------------------------------------------------
// Training losses with gradients w.r.t. the estimate.

struct LossValue {
  double value = 0.0;
  std::vector<double> grad;  // d value / d est
};

// RMSE with eps under the square root so the gradient stays finite at zero
// error.
LossValue RmseLoss(std::span<const double> ref, std::span<const double> est,
                   double eps = 1e-12);

// SI-SDR in dB with `eps` added to the distortion and target energies.
LossValue SiSdrLoss(std::span<const double> ref, std::span<const double> est,
                    double eps = 1e-8);

// ---------------------------------------------------------------------------
// Evaluation

struct EvalItem {
  std::string id;
  double snr_db = 0.0;
  Waveform clean;
  Waveform noisy;
  Waveform enhanced;
};

struct EvalOptions {
  // Pipeline delay of the enhanced signal; it is shifted back by this many
  // samples before scoring.
  size_t delay_samples = 0;
  // Samples dropped at both ends of the aligned span (filter bank edges).
  size_t edge_samples = 96;
  double si_sdr_cap_db = kSiSdrCapDb;
};

struct EvalRow {
  std::string id;
  double snr_db = 0.0;
  double si_sdr_noisy = 0.0;
  double si_sdr = 0.0;
  double stoi_noisy = 0.0;
  double stoi = 0.0;
  double delta_stoi = 0.0;
};

struct Quartiles {
  double mean = 0.0;
  double median = 0.0;
  double q1 = 0.0;
  double q3 = 0.0;
};

// Order-independent summary (values are sorted before reduction).
Quartiles Summarize(std::vector<double> values);

struct BucketSummary {
  double snr_db = 0.0;
  size_t count = 0;
  Quartiles si_sdr_noisy;
  Quartiles si_sdr;
  Quartiles stoi_noisy;
  Quartiles stoi;
  Quartiles delta_stoi;
};

struct EvalReport {
  std::vector<EvalRow> rows;
  // Sorted by descending SNR.
  std::vector<BucketSummary> buckets;

  void WriteRowsCsv(std::ostream& os) const;
  void WriteBucketsCsv(std::ostream& os) const;
};

EvalRow EvaluateItem(const EvalItem& item, const EvalOptions& options = {});
EvalReport Evaluate(std::span<const EvalItem> items,
                    const EvalOptions& options = {});
// Aggregates already-computed rows.
std::vector<BucketSummary> SummarizeBuckets(std::span<const EvalRow> rows);

}  // namespace clcnet

#endif  // CLCNET_METRICS_H_
