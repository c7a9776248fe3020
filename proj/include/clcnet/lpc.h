// Linear predictive coding for real and complex sequences.
//
// A prediction of order N forms x_hat[k] = sum_{i=1..N} a[i-1] * x[k-i]; the
// residual is d[k] = x[k] - x_hat[k]. Coefficients come from the biased
// autocorrelation and the Levinson-Durbin recursion (autocorrelation method)
// or from a direct least-squares fit over the signal (covariance method).
// Nothing here windows the input; callers do that when they want it.

#ifndef CLCNET_LPC_H_
#define CLCNET_LPC_H_

#include <span>
#include <vector>

#include "clcnet/common.h"

namespace clcnet::lpc {

template <typename T>
struct LpcCoeffs {
  // a[i] multiplies x[k - i - 1].
  std::vector<T> a;

  size_t order() const { return a.size(); }
};

template <typename T>
struct LevinsonResult {
  LpcCoeffs<T> coeffs;
  // Final residual power of the recursion, in the units of r (an
  // unnormalized sum of squared residuals for the biased estimator).
  double error_power = 0.0;
  std::vector<T> reflection;
};

// r[tau] = sum_k x[k] * conj(x[k - tau]) for tau = 0..max_lag.
// Throws DataError for empty input or max_lag >= x.size().
template <typename T>
std::vector<T> Autocorrelation(std::span<const T> x, size_t max_lag);

// Solves the Hermitian Toeplitz normal equations
// sum_i a[i] r[j - i] = r[j], j = 1..order, with r[-tau] = conj(r[tau]).
// Throws NumericError when r[0] <= 0 or when the recursion's error power
// stops being positive (the message names the failing lag).
template <typename T>
LevinsonResult<T> LevinsonDurbin(std::span<const T> r, size_t order);

// Least-squares fit of order `order` over k = order..len-1 without any edge
// effects. Exact for noiseless sums of up to `order` complex exponentials.
template <typename T>
LpcCoeffs<T> CovarianceMethod(std::span<const T> x, size_t order);

// Predictions for k = order..len-1; element j corresponds to k = order + j.
template <typename T>
std::vector<T> Predict(std::span<const T> x, const LpcCoeffs<T>& coeffs);

// Residual d[k] = x[k] - x_hat[k], same indexing as Predict.
template <typename T>
std::vector<T> Residual(std::span<const T> x, const LpcCoeffs<T>& coeffs);

}  // namespace clcnet::lpc

#endif  // CLCNET_LPC_H_
