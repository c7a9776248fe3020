#include "clcnet/metrics.h"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include <gtest/gtest.h>

#include "clcnet/data.h"
#include "test_util.h"

namespace clcnet {
namespace {

using testing::GaussianSignal;
constexpr double kPi = std::numbers::pi;

std::vector<double> Scaled(const std::vector<double>& x, double c) {
  std::vector<double> y(x);
  for (double& v : y) v *= c;
  return y;
}

std::vector<double> Sum(const std::vector<double>& a, const std::vector<double>& b,
                        double cb = 1.0) {
  std::vector<double> y(a);
  for (size_t i = 0; i < y.size(); ++i) y[i] += cb * b[i];
  return y;
}

// Part of b orthogonal to a.
std::vector<double> Orthogonalize(const std::vector<double>& b, const std::vector<double>& a) {
  double ab = 0.0, aa = 0.0;
  for (size_t i = 0; i < a.size(); ++i) {
    ab += a[i] * b[i];
    aa += a[i] * a[i];
  }
  return Sum(b, a, -ab / aa);
}

double Energy(const std::vector<double>& x) {
  double e = 0.0;
  for (double v : x) e += v * v;
  return e;
}

TEST(RmseTest, Examples) {
  const auto ref = GaussianSignal(1, 500);
  EXPECT_EQ(Rmse(ref, ref), 0.0);
  std::vector<double> shifted(ref);
  for (double& v : shifted) v += 0.1;
  EXPECT_NEAR(Rmse(ref, shifted), 0.1, 1e-12);

  const auto est = GaussianSignal(2, 500);
  double acc = 0.0;
  for (size_t i = 0; i < ref.size(); ++i) acc += (ref[i] - est[i]) * (ref[i] - est[i]);
  EXPECT_NEAR(Rmse(ref, est), std::sqrt(acc / 500.0), 1e-14);

  EXPECT_THROW(Rmse(ref, std::vector<double>(499)), DataError);
  EXPECT_THROW(Rmse(std::vector<double>{}, std::vector<double>{}), DataError);
}

TEST(RmseTest, TriangleInequality) {
  for (uint64_t s = 0; s < 50; ++s) {
    const auto a = GaussianSignal(3 * s, 64), b = GaussianSignal(3 * s + 1, 64),
               c = GaussianSignal(3 * s + 2, 64);
    EXPECT_LE(Rmse(a, c), Rmse(a, b) + Rmse(b, c) + 1e-12);
  }
}

TEST(SiSdrTest, ScaledCopiesHitTheCap) {
  const auto ref = GaussianSignal(4, 1000);
  for (double c : {1.0, 0.5, 2.0, -1.0}) {
    EXPECT_GE(SiSdr(ref, Scaled(ref, c)), 99.0) << c;
  }
  EXPECT_EQ(SiSdr(ref, ref), kSiSdrCapDb);
  EXPECT_EQ(SiSdr(ref, ref, 50.0), 50.0);
}

TEST(SiSdrTest, ScaleInvariance) {
  for (uint64_t s = 0; s < 20; ++s) {
    const auto ref = GaussianSignal(10 + s, 800);
    const auto est = Sum(ref, GaussianSignal(100 + s, 800), 0.3 + 0.1 * s);
    const double base = SiSdr(ref, est);
    for (double c : {1e-3, 0.37, 5.0, 1e3}) {
      EXPECT_NEAR(SiSdr(ref, Scaled(est, c)), base, 1e-9);
    }
  }
}

TEST(SiSdrTest, OrthogonalErrorAt20Db) {
  const auto ref = GaussianSignal(5, 2000);
  auto e = Orthogonalize(GaussianSignal(6, 2000), ref);
  e = Scaled(e, std::sqrt(Energy(ref) / 100.0 / Energy(e)));
  EXPECT_NEAR(SiSdr(ref, Sum(ref, e)), 20.0, 1e-6);
}

TEST(SiSdrTest, ClosedFormOnOrthogonalDecompositions) {
  Rng rng(7);
  for (uint64_t s = 0; s < 30; ++s) {
    const auto ref = GaussianSignal(200 + s, 300);
    const auto orth = Orthogonalize(GaussianSignal(300 + s, 300), ref);
    const double a = rng.Uniform(-3.0, 3.0), b = rng.Uniform(0.05, 3.0);
    const double expect = 10.0 * std::log10(a * a * Energy(ref) / (b * b * Energy(orth)));
    EXPECT_NEAR(SiSdr(ref, Sum(Scaled(ref, a), orth, b)), expect, 1e-8);
  }
}

TEST(SiSdrTest, Errors) {
  EXPECT_THROW(SiSdr(std::vector<double>(10, 0.0), GaussianSignal(1, 10)), DataError);
  EXPECT_THROW(SiSdr(GaussianSignal(1, 10), GaussianSignal(1, 11)), DataError);
}

// Two-tone amplitude-modulated signal and deterministic interferers, sampled
// at 10 kHz so no resampling is involved.
struct StoiFixture {
  std::vector<double> x, y_strong, y_weak;
  StoiFixture() {
    const double fs = 10000.0;
    for (size_t n = 0; n < 30000; ++n) {
      const double t = n / fs;
      const double v = (std::sin(2 * kPi * 180 * t) + 0.6 * std::sin(2 * kPi * 730 * t + 0.3) +
                        0.3 * std::sin(2 * kPi * 2100 * t)) *
                       (0.6 + 0.4 * std::sin(2 * kPi * 3 * t));
      const double chirp = std::sin(2 * kPi * (300 * t + 400 * t * t));
      x.push_back(v);
      y_strong.push_back(v + 0.8 * chirp + 0.5 * std::sin(2 * kPi * 1234 * t + 1));
      y_weak.push_back(v + 0.2 * chirp);
    }
  }
};

TEST(StoiTest, MatchesReferenceImplementationAt10kHz) {
  // Values from an independent reference STOI implementation run on the same
  // closed-form signals.
  const StoiFixture f;
  EXPECT_NEAR(Stoi(f.x, f.y_strong, 10000.0), 0.6966227431590509, 1e-9);
  EXPECT_NEAR(Stoi(f.x, f.y_weak, 10000.0), 0.8410317361853467, 1e-9);
}

TEST(StoiTest, SelfIsOne) {
  const Waveform s = SynthSpeech(1, 2.0);
  EXPECT_NEAR(Stoi(s, s), 1.0, 1e-6);
  const StoiFixture f;
  EXPECT_NEAR(Stoi(f.x, f.x, 10000.0), 1.0, 1e-6);
}

TEST(StoiTest, MonotoneInSnrOnSpeechLikeSignal) {
  const Waveform s = SynthSpeech(2, 3.0);
  const auto noise = GaussianSignal(3, s.size());
  auto at_snr = [&](double snr_db) {
    const double g = std::sqrt(Energy(s.samples) / Energy(noise) * std::pow(10.0, -snr_db / 10.0));
    return Stoi(s.samples, Sum(s.samples, noise, g), s.sample_rate);
  };
  const double low = at_snr(-5.0), high = at_snr(20.0);
  EXPECT_LT(low, high);
  EXPECT_GT(high, 0.9);
  for (double v : {low, high}) {
    EXPECT_GE(v, -1.0);
    EXPECT_LE(v, 1.0);
  }
}

TEST(StoiTest, InvariantToGlobalScaleOfEstimate) {
  const Waveform s = SynthSpeech(4, 2.0);
  const auto est = Sum(s.samples, GaussianSignal(5, s.size()), 0.05);
  const double base = Stoi(s.samples, est, s.sample_rate);
  EXPECT_NEAR(Stoi(s.samples, Scaled(est, 3.0), s.sample_rate), base, 1e-6);
  EXPECT_NEAR(Stoi(s.samples, Scaled(est, 0.2), s.sample_rate), base, 1e-6);
}

TEST(StoiTest, Errors) {
  const Waveform s = SynthSpeech(6, 0.3);
  EXPECT_THROW(Stoi(s, s), DataError);  // fewer than 30 frames
  const std::vector<double> zeros(48000, 0.0);
  EXPECT_THROW(Stoi(zeros, zeros, 24000.0), DataError);
  EXPECT_THROW(Stoi(zeros, std::vector<double>(10), 24000.0), DataError);
}

TEST(ResampleTest, LengthAndToneFidelity) {
  std::vector<double> x(24000);
  for (size_t n = 0; n < x.size(); ++n) x[n] = std::sin(2 * kPi * 1000.0 * n / 24000.0);
  const auto y = ResamplePoly(x, 5, 12);
  ASSERT_EQ(y.size(), 10000u);
  double err = 0.0;
  for (size_t n = 200; n + 200 < y.size(); ++n) {
    err = std::max(err, std::abs(y[n] - std::sin(2 * kPi * 1000.0 * n / 10000.0)));
  }
  EXPECT_LT(err, 1e-2);
  EXPECT_EQ(ResamplePoly(x, 3, 3), x);
  EXPECT_THROW(ResamplePoly(x, 0, 1), ConfigError);
}

TEST(ResampleTest, RemovesContentAboveNewNyquist) {
  std::vector<double> x(24000);
  for (size_t n = 0; n < x.size(); ++n) x[n] = std::sin(2 * kPi * 9000.0 * n / 24000.0);
  const auto y = ResamplePoly(x, 5, 12);
  double e = 0.0;
  for (size_t n = 200; n + 200 < y.size(); ++n) e += y[n] * y[n];
  EXPECT_LT(e / (y.size() - 400), 1e-3);
}

TEST(LossTest, GradientsMatchFiniteDifferences) {
  const auto ref = GaussianSignal(8, 40);
  const auto est = Sum(ref, GaussianSignal(9, 40), 0.5);
  const LossValue rmse = RmseLoss(ref, est);
  const LossValue sdr = SiSdrLoss(ref, est);
  EXPECT_NEAR(rmse.value, Rmse(ref, est), 1e-9);
  EXPECT_NEAR(sdr.value, SiSdr(ref, est), 1e-6);
  const double h = 1e-6;
  for (size_t i = 0; i < est.size(); ++i) {
    auto up = est, dn = est;
    up[i] += h;
    dn[i] -= h;
    const double g_rmse = (RmseLoss(ref, up).value - RmseLoss(ref, dn).value) / (2 * h);
    const double g_sdr = (SiSdrLoss(ref, up).value - SiSdrLoss(ref, dn).value) / (2 * h);
    EXPECT_NEAR(rmse.grad[i], g_rmse, 1e-6 * (1 + std::abs(g_rmse)));
    EXPECT_NEAR(sdr.grad[i], g_sdr, 1e-5 * (1 + std::abs(g_sdr)));
  }
}

TEST(SummarizeTest, QuartilesAndOrderIndependence) {
  const Quartiles q = Summarize({4, 1, 3, 2, 5});
  EXPECT_DOUBLE_EQ(q.mean, 3.0);
  EXPECT_DOUBLE_EQ(q.median, 3.0);
  EXPECT_DOUBLE_EQ(q.q1, 2.0);
  EXPECT_DOUBLE_EQ(q.q3, 4.0);
  const Quartiles even = Summarize({1, 2, 3, 4});
  EXPECT_DOUBLE_EQ(even.median, 2.5);
  EXPECT_DOUBLE_EQ(even.q1, 1.75);
}

std::vector<EvalItem> MakeItems(size_t count) {
  std::vector<EvalItem> items;
  const double snrs[] = {20, 10, 5, 0, -5};
  for (size_t i = 0; i < count; ++i) {
    EvalItem it;
    it.id = "utt" + std::to_string(i);
    it.snr_db = snrs[i % 5];
    it.clean = SynthSpeech(50 + i, 1.5);
    const auto noise = GaussianSignal(60 + i, it.clean.size());
    const double g =
        std::sqrt(Energy(it.clean.samples) / Energy(noise) * std::pow(10.0, -it.snr_db / 10.0));
    it.noisy = Waveform(Sum(it.clean.samples, noise, g));
    items.push_back(it);
  }
  return items;
}

TEST(EvaluateTest, EnhancedEqualsCleanOrNoisy) {
  auto items = MakeItems(5);
  for (auto& it : items) it.enhanced = it.clean;
  for (const EvalRow& r : Evaluate(items).rows) {
    EXPECT_EQ(r.si_sdr, kSiSdrCapDb);
    EXPECT_GE(r.delta_stoi, 0.0);
    EXPECT_DOUBLE_EQ(r.delta_stoi, r.stoi - r.stoi_noisy);
  }
  for (auto& it : items) it.enhanced = it.noisy;
  for (const EvalRow& r : Evaluate(items).rows) {
    EXPECT_EQ(r.si_sdr, r.si_sdr_noisy);
    EXPECT_EQ(r.delta_stoi, 0.0);
  }
}

TEST(EvaluateTest, DelayCompensation) {
  auto items = MakeItems(2);
  const size_t delay = 144;
  for (auto& it : items) {
    std::vector<double> e(it.clean.size(), 0.0);
    std::copy(it.clean.samples.begin(), it.clean.samples.end() - delay, e.begin() + delay);
    it.enhanced = Waveform(e);
  }
  EvalOptions opt;
  opt.delay_samples = delay;
  for (const EvalRow& r : Evaluate(items, opt).rows) EXPECT_EQ(r.si_sdr, kSiSdrCapDb);
  for (const EvalRow& r : Evaluate(items).rows) EXPECT_LT(r.si_sdr, 10.0);
}

TEST(EvaluateTest, BucketsSortedAndPermutationInvariant) {
  auto items = MakeItems(10);
  for (auto& it : items) it.enhanced = Waveform(Sum(it.clean.samples, it.noisy.samples));
  const EvalReport a = Evaluate(items);
  std::reverse(items.begin(), items.end());
  const EvalReport b = Evaluate(items);
  ASSERT_EQ(a.buckets.size(), 5u);
  const double order[] = {20, 10, 5, 0, -5};
  for (size_t i = 0; i < 5; ++i) {
    EXPECT_EQ(a.buckets[i].snr_db, order[i]);
    EXPECT_EQ(a.buckets[i].count, 2u);
  }
  std::ostringstream ca, cb;
  a.WriteBucketsCsv(ca);
  b.WriteBucketsCsv(cb);
  EXPECT_EQ(ca.str(), cb.str());

  std::ostringstream rows;
  a.WriteRowsCsv(rows);
  EXPECT_EQ(rows.str().substr(0, rows.str().find('\n')),
            "utt_id,snr_db,si_sdr_noisy,si_sdr,stoi_noisy,stoi,delta_stoi");
  for (const EvalRow& r : a.rows) {
    for (double v : {r.si_sdr, r.si_sdr_noisy, r.stoi, r.stoi_noisy, r.delta_stoi}) {
      EXPECT_TRUE(std::isfinite(v));
    }
  }
}

TEST(EvaluateTest, LengthErrors) {
  auto items = MakeItems(1);
  items[0].enhanced = Waveform(std::vector<double>(10));
  EXPECT_THROW(Evaluate(items), DataError);
}

}  // namespace
}  // namespace clcnet
