#include "clcnet/clc.h"

#include <cmath>

#include <gtest/gtest.h>

#include "clcnet/data.h"
#include "clcnet/filterbank.h"
#include "clcnet/lpc.h"
#include "clcnet/metrics.h"
#include "test_util.h"

namespace clcnet {
namespace {

using testing::GaussianSignal;

Spectrogram RandomSpec(uint64_t seed, size_t frames, size_t bins = 49) {
  Rng rng(seed);
  Spectrogram s(frames, bins, 48, 96, 24000.0);
  for (Complex& v : s.data()) v = Complex(rng.Normal(), rng.Normal());
  return s;
}

CoeffTensor RandomCoeffs(uint64_t seed, size_t frames, size_t order, int offset) {
  Rng rng(seed);
  CoeffTensor a(frames, 48, order, offset);
  for (Complex& v : a.data()) v = Complex(rng.Uniform(-1, 1), rng.Uniform(-1, 1));
  return a;
}

double RelDiff(const Spectrogram& a, const Spectrogram& b) {
  double num = 0.0, den = 0.0;
  for (size_t i = 0; i < a.data().size(); ++i) {
    num = std::max(num, std::abs(a.data()[i] - b.data()[i]));
    den = std::max(den, std::abs(b.data()[i]));
  }
  return num / std::max(den, 1e-300);
}

TEST(NormalizeTest, ConstantMagnitudeGoesToUnit) {
  Spectrogram x(400, 49, 48, 96, 24000.0);
  Rng rng(1);
  for (Complex& v : x.data()) v = std::polar(3.0, rng.Uniform(0.0, 6.28));
  NormState state(48, NormConfig().Decay(0.002), 1e-6);
  const Spectrogram y = Normalize(x, state, NormGains(48));
  for (size_t f = 0; f < 48; ++f) EXPECT_NEAR(std::abs(y.at(399, f)), 1.0, 1e-12);
  // The unbiased running mean is exact from the first frame.
  EXPECT_NEAR(std::abs(y.at(0, 5)), 1.0, 1e-12);
}

TEST(NormalizeTest, PhaseIsPreserved) {
  const Spectrogram x = RandomSpec(2, 200);
  NormState state(48, NormConfig().Decay(0.002), 1e-6);
  NormGains gains(48);
  for (size_t f = 0; f < 48; ++f) gains.gamma[f] = 0.3 + 0.05 * f;
  const Spectrogram y = Normalize(x, state, gains);
  for (size_t k = 0; k < 200; ++k) {
    for (size_t f = 0; f < 48; ++f) {
      EXPECT_NEAR(std::arg(y.at(k, f)), std::arg(x.at(k, f)), 4e-16 * M_PI);
    }
    EXPECT_EQ(y.at(k, 48), x.at(k, 48));  // Nyquist untouched
  }
}

TEST(NormalizeTest, CausalAndZeroSafe) {
  const Spectrogram x = RandomSpec(3, 50);
  Spectrogram cut(20, 49, 48, 96, 24000.0);
  std::copy(x.data().begin(), x.data().begin() + 20 * 49, cut.data().begin());
  NormState s1(48, 0.99, 1e-6), s2(48, 0.99, 1e-6);
  const Spectrogram full = Normalize(x, s1, NormGains(48));
  const Spectrogram part = Normalize(cut, s2, NormGains(48));
  for (size_t i = 0; i < 20 * 49; ++i) EXPECT_EQ(full.data()[i], part.data()[i]);

  Spectrogram zero(30, 49, 48, 96, 24000.0);
  NormState s3(48, 0.99, 1e-6);
  const Spectrogram z = Normalize(zero, s3, NormGains(48));
  for (const Complex& v : z.data()) EXPECT_EQ(v, Complex());
  for (size_t f = 0; f < 48; ++f) EXPECT_EQ(s3.Mu(f), 1e-6);
}

TEST(NormalizeTest, MismatchAndBadConfigThrow) {
  const Spectrogram x = RandomSpec(4, 5);
  NormState s(40, 0.9, 1e-6);
  EXPECT_THROW(Normalize(x, s, NormGains(48)), ConfigError);
  EXPECT_THROW(NormState(48, 1.0, 1e-6), ConfigError);
  EXPECT_THROW(NormState(48, 0.5, 0.0), ConfigError);
}

TEST(ApplyClcTest, IdentityAndRealGain) {
  const Spectrogram x = RandomSpec(5, 30);
  CoeffTensor id(30, 48, 5, 0);
  for (size_t k = 0; k < 30; ++k) {
    for (size_t f = 0; f < 48; ++f) id.at(k, 0, f) = 1.0;
  }
  const Spectrogram y = ApplyClc(x, id);
  for (size_t i = 0; i < x.data().size(); ++i) EXPECT_EQ(y.data()[i], x.data()[i]);

  CoeffTensor gain(30, 48, 5, 1);
  for (size_t k = 0; k < 30; ++k) {
    for (size_t f = 0; f < 48; ++f) gain.at(k, 1, f) = 0.25 + 0.01 * f;
  }
  const Spectrogram g = ApplyClc(x, gain);
  for (size_t k = 0; k < 30; ++k) {
    for (size_t f = 0; f < 48; ++f) EXPECT_EQ(g.at(k, f), (0.25 + 0.01 * f) * x.at(k, f));
  }
}

TEST(ApplyClcTest, MatchesLpcPredictionAtOffsetMinusOne) {
  const Spectrogram x = RandomSpec(6, 60);
  const std::vector<Complex> a = {Complex(0.5, 0.1), Complex(-0.2, 0.3), Complex(0.1, 0.0)};
  CoeffTensor coeffs(60, 48, 2, -1);
  for (size_t k = 0; k < 60; ++k) {
    for (size_t f = 0; f < 48; ++f) {
      for (size_t i = 0; i < 3; ++i) coeffs.at(k, i, f) = a[i];
    }
  }
  const Spectrogram y = ApplyClc(x, coeffs);
  double worst = 0.0;
  for (size_t f = 0; f < 48; ++f) {
    std::vector<Complex> column(60);
    for (size_t k = 0; k < 60; ++k) column[k] = x.at(k, f);
    const auto pred = lpc::Predict<Complex>(column, lpc::LpcCoeffs<Complex>{a});
    for (size_t j = 0; j < pred.size(); ++j) {
      worst = std::max(worst, std::abs(y.at(3 + j, f) - pred[j]) / std::abs(pred[j]));
    }
  }
  EXPECT_LT(worst, 1e-12);
}

TEST(ApplyClcTest, LinearInBothArguments) {
  const Spectrogram x1 = RandomSpec(7, 20), x2 = RandomSpec(8, 20);
  const CoeffTensor a1 = RandomCoeffs(9, 20, 5, 1), a2 = RandomCoeffs(10, 20, 5, 1);
  Spectrogram xs = x1;
  for (size_t i = 0; i < xs.data().size(); ++i) xs.data()[i] = 2.0 * x1.data()[i] - x2.data()[i];
  CoeffTensor as = a1;
  for (size_t i = 0; i < as.data().size(); ++i) as.data()[i] = 0.5 * a1.data()[i] + a2.data()[i];

  Spectrogram lin_x = ApplyClc(x1, a1);
  const Spectrogram y2 = ApplyClc(x2, a1);
  for (size_t k = 0; k < 20; ++k) {
    for (size_t f = 0; f < 48; ++f) lin_x.at(k, f) = 2.0 * lin_x.at(k, f) - y2.at(k, f);
  }
  const Spectrogram got_x = ApplyClc(xs, a1);
  for (size_t k = 0; k < 20; ++k) {
    for (size_t f = 0; f < 48; ++f) {
      EXPECT_LE(std::abs(got_x.at(k, f) - lin_x.at(k, f)), 1e-10 * (1 + std::abs(lin_x.at(k, f))));
    }
  }
  const Spectrogram b1 = ApplyClc(x1, a1), b2 = ApplyClc(x1, a2), bs = ApplyClc(x1, as);
  for (size_t k = 0; k < 20; ++k) {
    for (size_t f = 0; f < 48; ++f) {
      const Complex expect = 0.5 * b1.at(k, f) + b2.at(k, f);
      EXPECT_LE(std::abs(bs.at(k, f) - expect), 1e-10 * (1 + std::abs(expect)));
    }
  }
}

TEST(ApplyClcTest, ZeroExtensionAndErrors) {
  const Spectrogram x = RandomSpec(11, 10);
  CoeffTensor a(10, 48, 0, 2);  // single tap reading two frames ahead
  for (Complex& v : a.data()) v = 1.0;
  const Spectrogram y = ApplyClc(x, a);
  EXPECT_EQ(y.at(7, 3), x.at(9, 3));
  EXPECT_EQ(y.at(8, 3), Complex());
  EXPECT_EQ(y.at(9, 48), x.at(9, 48));
  EXPECT_THROW(ApplyClc(x, CoeffTensor(10, 40, 5, 1)), ConfigError);
  EXPECT_THROW(ApplyClc(x, CoeffTensor(11, 48, 5, 1)), ConfigError);
  EXPECT_THROW(CoeffTensor(1, 48, 5, -2), ConfigError);
}

TEST(ApplyClcTest, CoefficientGradientIsConjugateInput) {
  const Spectrogram x = RandomSpec(12, 15);
  const Spectrogram g = RandomSpec(13, 15);
  const CoeffTensor a = RandomCoeffs(14, 15, 3, 1);
  // L = Re sum conj(g) * S_hat is linear in A; its gradient w.r.t. (Re A,
  // Im A) packed as complex must reproduce L exactly.
  const Spectrogram y = ApplyClc(x, a);
  double l = 0.0;
  for (size_t k = 0; k < 15; ++k) {
    for (size_t f = 0; f < 48; ++f) l += (std::conj(g.at(k, f)) * y.at(k, f)).real();
  }
  const CoeffTensor grad = ClcCoeffGradient(x, g, 3, 1, 15);
  double l2 = 0.0;
  for (size_t i = 0; i < a.data().size(); ++i) l2 += (std::conj(grad.data()[i]) * a.data()[i]).real();
  EXPECT_NEAR(l, l2, 1e-10 * std::abs(l));
}

TEST(OracleClcTest, IdentityTargetGivesUnitTap) {
  const Spectrogram x = RandomSpec(15, 40);
  OracleClcOptions opt;
  opt.ridge = 0.0;
  const CoeffTensor a = OracleClcCoeffs(x, x, opt);
  for (size_t k = 0; k < 40; ++k) {
    for (size_t f = 0; f < 48; f += 7) {
      for (size_t i = 0; i <= 5; ++i) {
        const Complex expect = i == 1 ? Complex(1.0) : Complex();
        EXPECT_LT(std::abs(a.at(k, i, f) - expect), 1e-9);
      }
    }
  }
  const CoeffTensor ridge = OracleClcCoeffs(x, x);
  EXPECT_LT(std::abs(ridge.at(20, 1, 3) - 1.0), 1e-4);
}

TEST(OracleClcTest, ZeroTargetGivesZeroCoefficients) {
  const Spectrogram x = RandomSpec(16, 30);
  const CoeffTensor a = OracleClcCoeffs(x, x.ZerosLike());
  for (const Complex& v : a.data()) EXPECT_EQ(v, Complex());
}

TEST(OracleClcTest, SubsumesRealGainOnEveryWindow) {
  Rng rng(17);
  for (int instance = 0; instance < 100; ++instance) {
    const size_t n = 30;
    std::vector<Complex> x(n), s(n);
    for (size_t j = 0; j < n; ++j) {
      x[j] = Complex(rng.Normal(), rng.Normal());
      s[j] = Complex(rng.Normal(), rng.Normal());
    }
    const size_t order = rng.UniformInt(7);
    const int offset = static_cast<int>(rng.UniformInt(order + 1));
    const size_t first = 5 + rng.UniformInt(10);
    const size_t last = first + 3 + rng.UniformInt(10);
    const WindowFit clc = FitClcWindow(x, s, first, last, order, offset, 0.0);
    const WindowFit gain = FitRealGainWindow(x, s, first, last);
    EXPECT_LE(clc.residual, gain.residual + 1e-9) << "instance " << instance;
  }
}

TEST(OracleClcTest, TwoTonesInOneBandBeatRealGain) {
  // Two harmonics inside one 250 Hz band plus white noise.
  const size_t n = 24000;
  std::vector<double> clean(n), noisy(n);
  const auto noise = GaussianSignal(18, n, 0.3);
  for (size_t t = 0; t < n; ++t) {
    clean[t] = std::sin(2 * M_PI * 1060.0 * t / 24000.0) +
               0.8 * std::sin(2 * M_PI * 1170.0 * t / 24000.0 + 1.0);
    noisy[t] = clean[t] + noise[t];
  }
  const FilterBank bank;
  const Spectrogram x = bank.Analyze(noisy), s = bank.Analyze(clean);
  std::vector<Complex> xc(x.num_frames()), sc(x.num_frames());
  for (size_t k = 0; k < x.num_frames(); ++k) {
    xc[k] = x.at(k, 4);
    sc[k] = s.at(k, 4);
  }
  double clc = 0.0, gain = 0.0;
  for (size_t k = 4; k + 5 < xc.size(); k += 9) {
    clc += FitClcWindow(xc, sc, k - 4, k + 4, 5, 1, 0.0).residual;
    gain += FitRealGainWindow(xc, sc, k - 4, k + 4).residual;
  }
  EXPECT_LT(clc, gain);
}

TEST(OracleWienerTest, Examples) {
  const Spectrogram s = RandomSpec(19, 10);
  const RealMask g1 = OracleWienerGain(s, s.ZerosLike());
  for (double v : g1.values) EXPECT_EQ(v, 1.0);
  const RealMask g2 = OracleWienerGain(s, s);
  for (double v : g2.values) EXPECT_EQ(v, 0.5);
  const RealMask g0 = OracleWienerGain(s.ZerosLike(), s.ZerosLike());
  for (double v : g0.values) EXPECT_EQ(v, 0.0);
}

TEST(OracleWienerTest, ImprovesSiSdrOnUncorrelatedSignals) {
  const FilterBank bank;
  const Waveform speech = SynthSpeech(3, 1.0);
  const auto noise = GaussianSignal(20, speech.size(), 0.1);
  std::vector<double> noisy(speech.size());
  for (size_t i = 0; i < noisy.size(); ++i) noisy[i] = speech.samples[i] + noise[i];
  const Spectrogram s = bank.Analyze(speech.samples), nn = bank.Analyze(noise),
                    m = bank.Analyze(noisy);
  const Waveform y = bank.Synthesize(ApplyMask(m, OracleWienerGain(s, nn)), noisy.size());
  EXPECT_GT(SiSdr(speech.samples, y.samples), SiSdr(speech.samples, noisy));
}

TEST(OracleMaskTest, Examples) {
  const Spectrogram s = RandomSpec(21, 8);
  const OracleMaskSet same = OracleMasks(s, s);
  for (double v : same.iam.values) EXPECT_NEAR(v, 1.0, 1e-15);
  for (const Complex& v : same.cirm.data()) EXPECT_LT(std::abs(v - 1.0), 1e-15);

  const OracleMaskSet zero = OracleMasks(s.ZerosLike(), s);
  for (double v : zero.iam.values) EXPECT_EQ(v, 0.0);
  for (const Complex& v : zero.cirm.data()) EXPECT_EQ(v, Complex());

  const Spectrogram m = RandomSpec(22, 8);
  const Spectrogram rebuilt = ApplyComplexMask(m, OracleMasks(s, m).cirm);
  EXPECT_LT(RelDiff(rebuilt, s), 1e-14);

  Spectrogram tiny = s.ZerosLike();
  const OracleMaskSet capped = OracleMasks(s, tiny);
  for (double v : capped.iam.values) EXPECT_LE(v, 10.0);
}

TEST(OracleClcTest, CleanLpcCoefficientsOnlySlightlyHelp) {
  // Constant per-band LPC coefficients fitted on the clean spectrogram
  // (l = -1) versus the oracle CLC fitted on the noisy one.
  const FilterBank bank;
  const Waveform speech = SynthSpeech(8, 1.5);
  const auto noise = GaussianSignal(23, speech.size(), 0.08);
  std::vector<double> noisy(speech.size());
  for (size_t i = 0; i < noisy.size(); ++i) noisy[i] = speech.samples[i] + noise[i];
  const Spectrogram x = bank.Analyze(noisy), s = bank.Analyze(speech.samples);
  const size_t frames = x.num_frames();
  CoeffTensor lpc_coeffs(frames, 48, 4, -1);
  for (size_t f = 0; f < 48; ++f) {
    std::vector<Complex> col(frames);
    for (size_t k = 0; k < frames; ++k) col[k] = s.at(k, f);
    const auto a = lpc::CovarianceMethod<Complex>(col, 5);
    for (size_t k = 0; k < frames; ++k) {
      for (size_t i = 0; i < 5; ++i) lpc_coeffs.at(k, i, f) = a.a[i];
    }
  }
  const auto y_lpc = bank.Synthesize(ApplyClc(x, lpc_coeffs), noisy.size()).samples;
  const auto y_clc = bank.Synthesize(ApplyClc(x, OracleClcCoeffs(x, s)), noisy.size()).samples;
  const double base = SiSdr(speech.samples, noisy);
  EXPECT_LT(SiSdr(speech.samples, y_lpc) - base, SiSdr(speech.samples, y_clc) - base);
}

}  // namespace
}  // namespace clcnet
