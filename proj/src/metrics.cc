#include "clcnet/metrics.h"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <numeric>
#include <ostream>

#include "clcnet/fft.h"

namespace clcnet {
namespace {

void CheckPair(std::span<const double> ref, std::span<const double> est,
               const char* what) {
  if (ref.size() != est.size()) {
    throw DataError(std::string(what) + ": length mismatch (" +
                    std::to_string(ref.size()) + " vs " +
                    std::to_string(est.size()) + ")");
  }
  if (ref.empty()) throw DataError(std::string(what) + ": empty input");
}

double Dot(std::span<const double> a, std::span<const double> b) {
  double acc = 0.0;
  for (size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

// --- STOI constants ---------------------------------------------------------
constexpr double kStoiRate = 10000.0;
constexpr size_t kStoiFrame = 256;
constexpr size_t kStoiFft = 512;
constexpr size_t kStoiBands = 15;
constexpr double kStoiMinFreq = 150.0;
constexpr size_t kStoiSegment = 30;
constexpr double kStoiBeta = -15.0;
constexpr double kStoiDynRange = 40.0;
constexpr double kEps = 2.220446049250313e-16;

// Hann window without the zero end points (MATLAB hanning).
std::vector<double> StoiWindow(size_t n) {
  std::vector<double> w(n);
  for (size_t i = 0; i < n; ++i) {
    w[i] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * (i + 1) / (n + 1));
  }
  return w;
}

// Band index ranges [lo, hi) into the 257 DFT bins.
std::vector<std::pair<size_t, size_t>> ThirdOctaveBands() {
  const size_t bins = kStoiFft / 2 + 1;
  auto nearest_bin = [&](double freq) {
    size_t best = 0;
    double best_dist = INFINITY;
    for (size_t i = 0; i < bins; ++i) {
      const double d = std::abs(i * kStoiRate / kStoiFft - freq);
      if (d < best_dist) {
        best_dist = d;
        best = i;
      }
    }
    return best;
  };
  std::vector<std::pair<size_t, size_t>> bands;
  for (size_t k = 0; k < kStoiBands; ++k) {
    const double lo = kStoiMinFreq * std::pow(2.0, (2.0 * k - 1.0) / 6.0);
    const double hi = kStoiMinFreq * std::pow(2.0, (2.0 * k + 1.0) / 6.0);
    bands.emplace_back(nearest_bin(lo), nearest_bin(hi));
  }
  return bands;
}

// Frame starts 0, hop, ... strictly below len - frame (the reference
// implementation's framing).
size_t NumStoiFrames(size_t len, size_t frame, size_t hop) {
  if (len <= frame) return 0;
  return (len - frame - 1) / hop + 1;
}

void RemoveSilentFrames(std::vector<double>& x, std::vector<double>& y) {
  const size_t hop = kStoiFrame / 2;
  const size_t frames = NumStoiFrames(x.size(), kStoiFrame, hop);
  const std::vector<double> w = StoiWindow(kStoiFrame);
  std::vector<double> energy(frames);
  for (size_t m = 0; m < frames; ++m) {
    double acc = 0.0;
    for (size_t n = 0; n < kStoiFrame; ++n) {
      const double v = w[n] * x[m * hop + n];
      acc += v * v;
    }
    energy[m] = 20.0 * std::log10(std::sqrt(acc) + kEps);
  }
  const double peak =
      frames ? *std::max_element(energy.begin(), energy.end()) : 0.0;
  std::vector<size_t> keep;
  for (size_t m = 0; m < frames; ++m) {
    if (peak - kStoiDynRange - energy[m] < 0.0) keep.push_back(m);
  }
  const size_t out_len = keep.empty() ? 0 : (keep.size() - 1) * hop + kStoiFrame;
  std::vector<double> xo(out_len, 0.0), yo(out_len, 0.0);
  for (size_t j = 0; j < keep.size(); ++j) {
    const size_t src = keep[j] * hop;
    for (size_t n = 0; n < kStoiFrame; ++n) {
      xo[j * hop + n] += w[n] * x[src + n];
      yo[j * hop + n] += w[n] * y[src + n];
    }
  }
  x = std::move(xo);
  y = std::move(yo);
}

// bands x frames envelope matrix, row-major by band.
std::vector<double> BandEnvelopes(const std::vector<double>& x,
                                  size_t* num_frames) {
  static const std::vector<std::pair<size_t, size_t>> bands = ThirdOctaveBands();
  const size_t hop = kStoiFrame / 2;
  const size_t frames = NumStoiFrames(x.size(), kStoiFrame, hop);
  const std::vector<double> w = StoiWindow(kStoiFrame);
  const RealFft fft(kStoiFft);
  std::vector<double> buf(kStoiFft, 0.0);
  std::vector<Complex> spec(fft.num_bins());
  std::vector<double> env(kStoiBands * frames, 0.0);
  for (size_t m = 0; m < frames; ++m) {
    std::fill(buf.begin(), buf.end(), 0.0);
    for (size_t n = 0; n < kStoiFrame; ++n) buf[n] = w[n] * x[m * hop + n];
    fft.Forward(buf, spec);
    for (size_t b = 0; b < kStoiBands; ++b) {
      double acc = 0.0;
      for (size_t i = bands[b].first; i < bands[b].second; ++i) {
        acc += std::norm(spec[i]);
      }
      env[b * frames + m] = std::sqrt(acc);
    }
  }
  *num_frames = frames;
  return env;
}

double Percentile(const std::vector<double>& sorted, double q) {
  if (sorted.empty()) return NAN;
  const double pos = q * (sorted.size() - 1);
  const size_t lo = static_cast<size_t>(std::floor(pos));
  const size_t hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (pos - lo) * (sorted[hi] - sorted[lo]);
}

void WriteQuartiles(std::ostream& os, const Quartiles& q) {
  os << ',' << FormatDouble(q.mean) << ',' << FormatDouble(q.median) << ','
     << FormatDouble(q.q1) << ',' << FormatDouble(q.q3);
}

}  // namespace

double Rmse(std::span<const double> ref, std::span<const double> est) {
  CheckPair(ref, est, "rmse");
  double acc = 0.0;
  for (size_t i = 0; i < ref.size(); ++i) {
    const double d = ref[i] - est[i];
    acc += d * d;
  }
  return std::sqrt(acc / ref.size());
}

double SiSdr(std::span<const double> ref, std::span<const double> est,
             double cap_db) {
  CheckPair(ref, est, "si_sdr");
  const double ref_energy = Dot(ref, ref);
  if (!(ref_energy > 0.0)) throw DataError("si_sdr: reference is all zero");
  const double alpha = Dot(est, ref) / ref_energy;
  double target = 0.0;
  double distortion = 0.0;
  for (size_t i = 0; i < ref.size(); ++i) {
    const double t = alpha * ref[i];
    const double e = est[i] - t;
    target += t * t;
    distortion += e * e;
  }
  if (distortion == 0.0) return cap_db;
  if (target == 0.0) return -cap_db;
  return std::clamp(10.0 * std::log10(target / distortion), -cap_db, cap_db);
}

std::vector<double> ResamplePoly(std::span<const double> x, size_t up,
                                 size_t down) {
  if (up == 0 || down == 0) throw ConfigError("resample: zero factor");
  const size_t g = std::gcd(up, down);
  up /= g;
  down /= g;
  if (up == 1 && down == 1) return {x.begin(), x.end()};
  const size_t max_rate = std::max(up, down);
  const size_t half = 10 * max_rate;
  const size_t taps = 2 * half + 1;
  const double cutoff = 1.0 / static_cast<double>(max_rate);
  const double beta = 5.0;
  std::vector<double> h(taps);
  double sum = 0.0;
  for (size_t n = 0; n < taps; ++n) {
    const double m = static_cast<double>(n) - static_cast<double>(half);
    const double arg = cutoff * m;
    const double sinc =
        arg == 0.0 ? 1.0 : std::sin(std::numbers::pi * arg) / (std::numbers::pi * arg);
    const double ratio = 2.0 * n / (taps - 1) - 1.0;
    const double win = std::cyl_bessel_i(0.0, beta * std::sqrt(1.0 - ratio * ratio)) /
                       std::cyl_bessel_i(0.0, beta);
    h[n] = cutoff * sinc * win;
    sum += h[n];
  }
  for (double& v : h) v *= static_cast<double>(up) / sum;

  const size_t out_len = (x.size() * up + down - 1) / down;
  std::vector<double> y(out_len, 0.0);
  for (size_t n = 0; n < out_len; ++n) {
    // y[n] = sum_k x[k] h[n * down + half - k * up]
    const long center = static_cast<long>(n * down + half);
    const long lowest = center - static_cast<long>(taps) + 1;
    const long step = static_cast<long>(up);
    const long k_min = lowest <= 0 ? 0 : (lowest + step - 1) / step;
    const long k_max =
        std::min<long>(center / step, static_cast<long>(x.size()) - 1);
    double acc = 0.0;
    for (long k = k_min; k <= k_max; ++k) {
      acc += x[k] * h[center - k * step];
    }
    y[n] = acc;
  }
  return y;
}

double Stoi(std::span<const double> ref, std::span<const double> est,
            double sample_rate) {
  CheckPair(ref, est, "stoi");
  if (Dot(ref, ref) == 0.0) throw DataError("stoi: reference is silent");
  std::vector<double> x, y;
  const long rate = std::lround(sample_rate);
  if (rate == static_cast<long>(kStoiRate)) {
    x.assign(ref.begin(), ref.end());
    y.assign(est.begin(), est.end());
  } else {
    const long g = std::gcd(rate, static_cast<long>(kStoiRate));
    const size_t up = static_cast<size_t>(kStoiRate) / g;
    const size_t down = static_cast<size_t>(rate / g);
    x = ResamplePoly(ref, up, down);
    y = ResamplePoly(est, up, down);
  }
  RemoveSilentFrames(x, y);
  size_t frames = 0, frames_y = 0;
  const std::vector<double> xe = BandEnvelopes(x, &frames);
  const std::vector<double> ye = BandEnvelopes(y, &frames_y);
  if (frames < kStoiSegment) {
    throw DataError("stoi: input too short, " + std::to_string(frames) +
                    " active frames (need " + std::to_string(kStoiSegment) + ")");
  }
  const double clip = std::pow(10.0, -kStoiBeta / 20.0);
  double total = 0.0;
  size_t count = 0;
  std::vector<double> xs(kStoiSegment), ys(kStoiSegment);
  for (size_t m = kStoiSegment; m <= frames; ++m) {
    for (size_t b = 0; b < kStoiBands; ++b) {
      const double* xb = &xe[b * frames + m - kStoiSegment];
      const double* yb = &ye[b * frames + m - kStoiSegment];
      double xn = 0.0, yn = 0.0;
      for (size_t j = 0; j < kStoiSegment; ++j) {
        xn += xb[j] * xb[j];
        yn += yb[j] * yb[j];
      }
      const double scale = std::sqrt(xn) / (std::sqrt(yn) + kEps);
      double xmean = 0.0, ymean = 0.0;
      for (size_t j = 0; j < kStoiSegment; ++j) {
        ys[j] = std::min(yb[j] * scale, xb[j] * (1.0 + clip));
        xs[j] = xb[j];
        xmean += xs[j];
        ymean += ys[j];
      }
      xmean /= kStoiSegment;
      ymean /= kStoiSegment;
      double xx = 0.0, yy = 0.0, xy = 0.0;
      for (size_t j = 0; j < kStoiSegment; ++j) {
        xs[j] -= xmean;
        ys[j] -= ymean;
        xx += xs[j] * xs[j];
        yy += ys[j] * ys[j];
        xy += xs[j] * ys[j];
      }
      total += xy / ((std::sqrt(xx) + kEps) * (std::sqrt(yy) + kEps));
      ++count;
    }
  }
  return total / static_cast<double>(count);
}

LossValue RmseLoss(std::span<const double> ref, std::span<const double> est,
                   double eps) {
  CheckPair(ref, est, "rmse_loss");
  LossValue out;
  out.grad.resize(est.size());
  double acc = 0.0;
  for (size_t i = 0; i < ref.size(); ++i) {
    const double d = est[i] - ref[i];
    acc += d * d;
  }
  const double n = static_cast<double>(ref.size());
  out.value = std::sqrt(acc / n + eps);
  for (size_t i = 0; i < ref.size(); ++i) {
    out.grad[i] = (est[i] - ref[i]) / (n * out.value);
  }
  return out;
}

LossValue SiSdrLoss(std::span<const double> ref, std::span<const double> est,
                    double eps) {
  CheckPair(ref, est, "si_sdr_loss");
  const double ref_energy = Dot(ref, ref);
  if (!(ref_energy > 0.0)) throw DataError("si_sdr_loss: reference is all zero");
  const double alpha = Dot(est, ref) / ref_energy;
  double target = 0.0;
  double distortion = 0.0;
  for (size_t i = 0; i < ref.size(); ++i) {
    const double t = alpha * ref[i];
    const double e = est[i] - t;
    target += t * t;
    distortion += e * e;
  }
  LossValue out;
  out.value = 10.0 * std::log10((target + eps) / (distortion + eps));
  const double k = 10.0 / std::numbers::ln10;
  const double wt = 2.0 * alpha / (target + eps);
  const double wd = 2.0 / (distortion + eps);
  out.grad.resize(est.size());
  for (size_t i = 0; i < ref.size(); ++i) {
    const double e = est[i] - alpha * ref[i];
    out.grad[i] = k * (wt * ref[i] - wd * e);
  }
  return out;
}

Quartiles Summarize(std::vector<double> values) {
  Quartiles q;
  if (values.empty()) return q;
  std::sort(values.begin(), values.end());
  double sum = 0.0;
  for (double v : values) sum += v;
  q.mean = sum / static_cast<double>(values.size());
  q.median = Percentile(values, 0.5);
  q.q1 = Percentile(values, 0.25);
  q.q3 = Percentile(values, 0.75);
  return q;
}

EvalRow EvaluateItem(const EvalItem& item, const EvalOptions& options) {
  const size_t len = item.clean.size();
  if (item.noisy.size() != len || item.enhanced.size() != len) {
    throw DataError("evaluate: " + item.id + ": clean/noisy/enhanced lengths differ");
  }
  const size_t delay = options.delay_samples;
  const size_t edge = options.edge_samples;
  if (len <= delay + 2 * edge) {
    throw DataError("evaluate: " + item.id + ": too short for delay and edges");
  }
  // Reference span [edge, len - delay - edge); enhanced is read `delay`
  // samples later.
  const size_t n = len - delay - 2 * edge;
  std::span<const double> clean(item.clean.samples.data() + edge, n);
  std::span<const double> noisy(item.noisy.samples.data() + edge, n);
  std::span<const double> enhanced(item.enhanced.samples.data() + edge + delay, n);
  const double rate = item.clean.sample_rate;

  EvalRow row;
  row.id = item.id;
  row.snr_db = item.snr_db;
  row.si_sdr_noisy = SiSdr(clean, noisy, options.si_sdr_cap_db);
  row.si_sdr = SiSdr(clean, enhanced, options.si_sdr_cap_db);
  row.stoi_noisy = Stoi(clean, noisy, rate);
  row.stoi = Stoi(clean, enhanced, rate);
  row.delta_stoi = row.stoi - row.stoi_noisy;
  return row;
}

std::vector<BucketSummary> SummarizeBuckets(std::span<const EvalRow> rows) {
  std::map<double, std::vector<const EvalRow*>, std::greater<>> groups;
  for (const EvalRow& r : rows) groups[r.snr_db].push_back(&r);
  std::vector<BucketSummary> buckets;
  for (const auto& [snr, members] : groups) {
    auto collect = [&](double EvalRow::*field) {
      std::vector<double> v;
      for (const EvalRow* r : members) v.push_back(r->*field);
      return Summarize(std::move(v));
    };
    BucketSummary b;
    b.snr_db = snr;
    b.count = members.size();
    b.si_sdr_noisy = collect(&EvalRow::si_sdr_noisy);
    b.si_sdr = collect(&EvalRow::si_sdr);
    b.stoi_noisy = collect(&EvalRow::stoi_noisy);
    b.stoi = collect(&EvalRow::stoi);
    b.delta_stoi = collect(&EvalRow::delta_stoi);
    buckets.push_back(b);
  }
  return buckets;
}

EvalReport Evaluate(std::span<const EvalItem> items, const EvalOptions& options) {
  EvalReport report;
  for (const EvalItem& item : items) report.rows.push_back(EvaluateItem(item, options));
  report.buckets = SummarizeBuckets(report.rows);
  return report;
}

void EvalReport::WriteRowsCsv(std::ostream& os) const {
  os << "utt_id,snr_db,si_sdr_noisy,si_sdr,stoi_noisy,stoi,delta_stoi\n";
  for (const EvalRow& r : rows) {
    os << r.id << ',' << FormatDouble(r.snr_db) << ',' << FormatDouble(r.si_sdr_noisy)
       << ',' << FormatDouble(r.si_sdr) << ',' << FormatDouble(r.stoi_noisy) << ','
       << FormatDouble(r.stoi) << ',' << FormatDouble(r.delta_stoi) << '\n';
  }
}

void EvalReport::WriteBucketsCsv(std::ostream& os) const {
  os << "snr_db,count";
  for (const char* name :
       {"si_sdr_noisy", "si_sdr", "stoi_noisy", "stoi", "delta_stoi"}) {
    os << ',' << name << "_mean," << name << "_median," << name << "_q1,"
       << name << "_q3";
  }
  os << '\n';
  for (const BucketSummary& b : buckets) {
    os << FormatDouble(b.snr_db) << ',' << b.count;
    WriteQuartiles(os, b.si_sdr_noisy);
    WriteQuartiles(os, b.si_sdr);
    WriteQuartiles(os, b.stoi_noisy);
    WriteQuartiles(os, b.stoi);
    WriteQuartiles(os, b.delta_stoi);
    os << '\n';
  }
}

}  // namespace clcnet
