#include "clcnet/lpc.h"

#include <cmath>
#include <numbers>

#include <Eigen/Dense>
#include <gtest/gtest.h>

#include "test_util.h"

namespace clcnet {
namespace {

using lpc::LpcCoeffs;

template <typename T>
std::vector<T> BruteAutocorrelation(const std::vector<T>& x, size_t max_lag) {
  std::vector<T> r(max_lag + 1, T{});
  for (size_t tau = 0; tau <= max_lag; ++tau) {
    for (size_t k = tau; k < x.size(); ++k) {
      if constexpr (std::is_same_v<T, Complex>) {
        r[tau] += x[k] * std::conj(x[k - tau]);
      } else {
        r[tau] += x[k] * x[k - tau];
      }
    }
  }
  return r;
}

// Dense solve of the Hermitian Toeplitz normal equations.
std::vector<Complex> DenseNormalSolve(const std::vector<Complex>& r, size_t order) {
  Eigen::MatrixXcd m(order, order);
  Eigen::VectorXcd rhs(order);
  for (size_t j = 0; j < order; ++j) {
    rhs(j) = r[j + 1];
    for (size_t i = 0; i < order; ++i) {
      m(j, i) = j >= i ? r[j - i] : std::conj(r[i - j]);
    }
  }
  const Eigen::VectorXcd a = m.partialPivLu().solve(rhs);
  return std::vector<Complex>(a.data(), a.data() + order);
}

std::vector<Complex> RandomComplex(uint64_t seed, size_t n) {
  Rng rng(seed);
  std::vector<Complex> x(n);
  for (Complex& v : x) v = Complex(rng.Normal(), rng.Normal());
  return x;
}

// Sum of unit-ish complex exponentials with random frequencies and phases.
std::vector<Complex> Exponentials(uint64_t seed, size_t count, size_t n) {
  Rng rng(seed);
  std::vector<Complex> x(n);
  for (size_t p = 0; p < count; ++p) {
    const double w = rng.Uniform(-3.0, 3.0);
    const Complex amp = std::polar(rng.Uniform(0.5, 1.5), rng.Uniform(0.0, 6.28));
    for (size_t k = 0; k < n; ++k) x[k] += amp * std::polar(1.0, w * k);
  }
  return x;
}

template <typename T>
double RelativeRms(const std::vector<T>& d, const std::vector<T>& x) {
  double e = 0.0, s = 0.0;
  for (const T& v : d) e += std::norm(v);
  for (const T& v : x) s += std::norm(v);
  return std::sqrt((e / d.size()) / (s / x.size()));
}

TEST(AutocorrelationTest, Examples) {
  const std::vector<double> ones = {1, 1, 1, 1};
  const auto r = lpc::Autocorrelation<double>(ones, 1);
  EXPECT_EQ(r, (std::vector<double>{4, 3}));

  std::vector<Complex> e(50);
  for (size_t k = 0; k < e.size(); ++k) e[k] = std::polar(1.0, 0.3 * k);
  const auto re = lpc::Autocorrelation<Complex>(e, 5);
  for (size_t tau = 0; tau <= 5; ++tau) EXPECT_NEAR(std::abs(re[tau]), 50.0 - tau, 1e-12);
}

TEST(AutocorrelationTest, MatchesBruteForce) {
  for (uint64_t seed = 0; seed < 5; ++seed) {
    const auto x = RandomComplex(seed, 200);
    const auto fast = lpc::Autocorrelation<Complex>(x, 20);
    const auto slow = BruteAutocorrelation(x, 20);
    for (size_t i = 0; i <= 20; ++i) {
      EXPECT_LE(std::abs(fast[i] - slow[i]), 1e-12 * std::abs(slow[0]));
    }
    EXPECT_EQ(fast[0].imag(), 0.0);
    EXPECT_GE(fast[0].real(), 0.0);
  }
}

TEST(AutocorrelationTest, Errors) {
  EXPECT_THROW(lpc::Autocorrelation<double>(std::vector<double>{}, 0), DataError);
  EXPECT_THROW(lpc::Autocorrelation<double>(std::vector<double>{1, 2}, 2), DataError);
}

TEST(LevinsonDurbinTest, MatchesDenseNormalEquations) {
  double worst = 0.0;
  for (uint64_t c = 0; c < 100; ++c) {
    const size_t order = 1 + c % 16;
    const auto x = RandomComplex(1000 + c, 64 + 8 * order);
    const auto r = lpc::Autocorrelation<Complex>(x, order);
    const auto fast = lpc::LevinsonDurbin<Complex>(r, order);
    const auto dense = DenseNormalSolve(r, order);
    double num = 0.0, den = 0.0;
    for (size_t i = 0; i < order; ++i) {
      num = std::max(num, std::abs(fast.coeffs.a[i] - dense[i]));
      den = std::max(den, std::abs(dense[i]));
    }
    worst = std::max(worst, num / den);
  }
  EXPECT_LT(worst, 1e-8);
}

TEST(LevinsonDurbinTest, RealStableArProcess) {
  // x_k = 1.3 x_{k-1} - 0.8 x_{k-2} + 0.2 x_{k-3} - 0.05 x_{k-4} + e_k
  const std::vector<double> a_true = {1.3, -0.8, 0.2, -0.05};
  Rng rng(3);
  std::vector<double> x(200000, 0.0);
  for (size_t k = 4; k < x.size(); ++k) {
    x[k] = rng.Normal();
    for (size_t i = 0; i < 4; ++i) x[k] += a_true[i] * x[k - i - 1];
  }
  const auto r = lpc::Autocorrelation<double>(x, 4);
  const auto ld = lpc::LevinsonDurbin<double>(r, 4);
  for (size_t i = 0; i < 4; ++i) EXPECT_NEAR(ld.coeffs.a[i], a_true[i], 0.02);
  // Residual energy agrees with the recursion's error power.
  const auto d = lpc::Residual<double>(x, ld.coeffs);
  double e = 0.0;
  for (double v : d) e += v * v;
  EXPECT_NEAR(e / ld.error_power, 1.0, 0.05);
  for (double k : ld.reflection) EXPECT_LT(std::abs(k), 1.0);
}

TEST(LevinsonDurbinTest, SinusoidAndRotation) {
  const double w = 0.4;
  std::vector<double> c(20000);
  for (size_t k = 0; k < c.size(); ++k) c[k] = std::cos(w * k);
  const auto ld = lpc::LevinsonDurbin<double>(lpc::Autocorrelation<double>(c, 2), 2);
  EXPECT_NEAR(ld.coeffs.a[0], 2 * std::cos(w), 1e-3);
  EXPECT_NEAR(ld.coeffs.a[1], -1.0, 1e-3);
  EXPECT_LT(RelativeRms(lpc::Residual<double>(c, ld.coeffs), c), 1e-2);

  std::vector<Complex> e(1000);
  for (size_t k = 0; k < e.size(); ++k) e[k] = std::polar(1.0, w * k);
  const auto le = lpc::LevinsonDurbin<Complex>(lpc::Autocorrelation<Complex>(e, 1), 1);
  EXPECT_LT(std::abs(le.coeffs.a[0] - std::polar(1.0, w)), 2e-3);
}

TEST(LevinsonDurbinTest, Errors) {
  EXPECT_THROW(lpc::LevinsonDurbin<double>(std::vector<double>{0.0, 0.0}, 1), NumericError);
  EXPECT_THROW(lpc::LevinsonDurbin<double>(std::vector<double>{-1.0, 0.0}, 1), NumericError);
  // |r[1]| > r[0] is not a valid correlation sequence.
  EXPECT_THROW(lpc::LevinsonDurbin<double>(std::vector<double>{1.0, 2.0}, 1), NumericError);
  EXPECT_THROW(lpc::LevinsonDurbin<double>(std::vector<double>{1.0}, 1), ConfigError);
}

TEST(OrderSufficiencyTest, ComplexExponentialsNeedOrderP) {
  for (size_t p = 1; p <= 6; ++p) {
    const auto x = Exponentials(p, p, 400);
    for (size_t order = p; order <= p + 2; ++order) {
      const auto a = lpc::CovarianceMethod<Complex>(x, order);
      EXPECT_LT(RelativeRms(lpc::Residual<Complex>(x, a), x), 1e-6)
          << "P=" << p << " order=" << order;
    }
    if (p > 1) {
      const auto a = lpc::CovarianceMethod<Complex>(x, p - 1);
      EXPECT_GT(RelativeRms(lpc::Residual<Complex>(x, a), x), 1e-3);
    }
  }
}

TEST(OrderSufficiencyTest, RealSinusoidsNeedOrder2P) {
  Rng rng(7);
  for (size_t p = 1; p <= 4; ++p) {
    std::vector<double> x(500, 0.0);
    for (size_t s = 0; s < p; ++s) {
      const double w = rng.Uniform(0.1, 3.0), ph = rng.Uniform(0.0, 6.28);
      for (size_t k = 0; k < x.size(); ++k) x[k] += std::cos(w * k + ph);
    }
    const auto a = lpc::CovarianceMethod<double>(x, 2 * p);
    EXPECT_LT(RelativeRms(lpc::Residual<double>(x, a), x), 1e-6) << "P=" << p;
  }
}

TEST(OrderSufficiencyTest, ThreeExponentialsViaLevinsonDurbinOnLongSignal) {
  // The autocorrelation method converges to the exact fit as the signal
  // grows; the covariance method is exact at any length.
  const auto x = Exponentials(11, 3, 50000);
  const auto ld = lpc::LevinsonDurbin<Complex>(lpc::Autocorrelation<Complex>(x, 3), 3);
  EXPECT_LT(RelativeRms(lpc::Residual<Complex>(x, ld.coeffs), x), 1e-2);
}

TEST(PredictTest, DefinitionAndTrivialCases) {
  const std::vector<double> x = {1, 2, 4, 8, 16};
  const auto p = lpc::Predict<double>(x, LpcCoeffs<double>{{1.0}});
  EXPECT_EQ(p, (std::vector<double>{1, 2, 4, 8}));
  const auto z = lpc::Predict<double>(x, LpcCoeffs<double>{{0.0, 0.0}});
  EXPECT_EQ(z, (std::vector<double>{0, 0, 0}));
  const auto d = lpc::Residual<double>(x, LpcCoeffs<double>{{0.0, 0.0}});
  EXPECT_EQ(d, (std::vector<double>{4, 8, 16}));
  const auto two = lpc::Predict<double>(x, LpcCoeffs<double>{{0.5, 0.25}});
  EXPECT_EQ(two[0], 0.5 * 2 + 0.25 * 1);
}

TEST(PredictTest, ScaleEquivariance) {
  const auto x = RandomComplex(5, 300);
  std::vector<Complex> y(x.size());
  const double c = 3.7;
  for (size_t i = 0; i < x.size(); ++i) y[i] = c * x[i];
  const auto ax = lpc::LevinsonDurbin<Complex>(lpc::Autocorrelation<Complex>(x, 6), 6);
  const auto ay = lpc::LevinsonDurbin<Complex>(lpc::Autocorrelation<Complex>(y, 6), 6);
  for (size_t i = 0; i < 6; ++i) {
    EXPECT_LE(std::abs(ax.coeffs.a[i] - ay.coeffs.a[i]), 1e-10 * (1 + std::abs(ax.coeffs.a[i])));
  }
  const auto dx = lpc::Residual<Complex>(x, ax.coeffs);
  const auto dy = lpc::Residual<Complex>(y, ax.coeffs);
  for (size_t i = 0; i < dx.size(); ++i) {
    EXPECT_LE(std::abs(dy[i] - c * dx[i]), 1e-10 * std::abs(c * dx[i]) + 1e-14);
  }
}

}  // namespace
}  // namespace clcnet
