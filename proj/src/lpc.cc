#include "clcnet/lpc.h"

#include <Eigen/Dense>

#include <cmath>
#include <string>

namespace clcnet::lpc {
namespace {

inline double Conj(double v) { return v; }
inline Complex Conj(const Complex& v) { return std::conj(v); }
inline double Norm(double v) { return v * v; }
inline double Norm(const Complex& v) { return std::norm(v); }
inline double RealPart(double v) { return v; }
inline double RealPart(const Complex& v) { return v.real(); }

template <typename T>
void CheckPredictInput(std::span<const T> x, const LpcCoeffs<T>& coeffs) {
  if (x.size() < coeffs.order()) {
    throw DataError("lpc: sequence of length " + std::to_string(x.size()) +
                    " is shorter than the prediction order " +
                    std::to_string(coeffs.order()));
  }
}

}  // namespace

template <typename T>
std::vector<T> Autocorrelation(std::span<const T> x, size_t max_lag) {
  if (x.empty()) throw DataError("lpc: autocorrelation of an empty sequence");
  if (max_lag >= x.size()) {
    throw DataError("lpc: max_lag " + std::to_string(max_lag) +
                    " must be smaller than the sequence length " +
                    std::to_string(x.size()));
  }
  std::vector<T> r(max_lag + 1, T{});
  for (size_t tau = 0; tau <= max_lag; ++tau) {
    T acc{};
    for (size_t k = tau; k < x.size(); ++k) acc += x[k] * Conj(x[k - tau]);
    r[tau] = acc;
  }
  return r;
}

template <typename T>
LevinsonResult<T> LevinsonDurbin(std::span<const T> r, size_t order) {
  if (r.size() < order + 1) {
    throw ConfigError("lpc: need " + std::to_string(order + 1) +
                      " correlation values, got " + std::to_string(r.size()));
  }
  const double r0 = RealPart(r[0]);
  if (!(r0 > 0.0)) {
    throw NumericError("lpc: degenerate signal, r[0] = " + FormatDouble(r0));
  }
  LevinsonResult<T> result;
  std::vector<T>& a = result.coeffs.a;
  a.assign(order, T{});
  std::vector<T> prev(order, T{});
  double error = r0;
  for (size_t m = 1; m <= order; ++m) {
    T acc = r[m];
    for (size_t i = 1; i < m; ++i) acc -= a[i - 1] * r[m - i];
    const T k = acc / error;
    prev.assign(a.begin(), a.end());
    a[m - 1] = k;
    for (size_t i = 1; i < m; ++i) a[i - 1] = prev[i - 1] - k * Conj(prev[m - i - 1]);
    error *= 1.0 - Norm(k);
    result.reflection.push_back(k);
    if (!(error > 0.0)) {
      throw NumericError("lpc: ill-conditioned correlation sequence, error "
                         "power " + FormatDouble(error) + " at lag " +
                         std::to_string(m));
    }
  }
  result.error_power = error;
  return result;
}

template <typename T>
LpcCoeffs<T> CovarianceMethod(std::span<const T> x, size_t order) {
  if (x.size() <= order) {
    throw DataError("lpc: covariance method needs more than " +
                    std::to_string(order) + " samples");
  }
  using Matrix = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic>;
  using Vector = Eigen::Matrix<T, Eigen::Dynamic, 1>;
  const Eigen::Index rows = static_cast<Eigen::Index>(x.size() - order);
  Matrix design(rows, static_cast<Eigen::Index>(order));
  Vector target(rows);
  for (Eigen::Index j = 0; j < rows; ++j) {
    const size_t k = order + static_cast<size_t>(j);
    target(j) = x[k];
    for (size_t i = 0; i < order; ++i) design(j, i) = x[k - i - 1];
  }
  // Minimum-norm least squares covers rank-deficient fits (fewer
  // components than the order).
  Vector solution = design.completeOrthogonalDecomposition().solve(target);
  LpcCoeffs<T> coeffs;
  coeffs.a.assign(solution.data(), solution.data() + solution.size());
  return coeffs;
}

template <typename T>
std::vector<T> Predict(std::span<const T> x, const LpcCoeffs<T>& coeffs) {
  CheckPredictInput(x, coeffs);
  const size_t order = coeffs.order();
  std::vector<T> out(x.size() - order, T{});
  for (size_t k = order; k < x.size(); ++k) {
    T acc{};
    for (size_t i = 0; i < order; ++i) acc += coeffs.a[i] * x[k - i - 1];
    out[k - order] = acc;
  }
  return out;
}

template <typename T>
std::vector<T> Residual(std::span<const T> x, const LpcCoeffs<T>& coeffs) {
  std::vector<T> d = Predict(x, coeffs);
  for (size_t j = 0; j < d.size(); ++j) d[j] = x[coeffs.order() + j] - d[j];
  return d;
}

#define CLCNET_LPC_INSTANTIATE(T)                                              \
  template std::vector<T> Autocorrelation<T>(std::span<const T>, size_t);      \
  template LevinsonResult<T> LevinsonDurbin<T>(std::span<const T>, size_t);    \
  template LpcCoeffs<T> CovarianceMethod<T>(std::span<const T>, size_t);       \
  template std::vector<T> Predict<T>(std::span<const T>, const LpcCoeffs<T>&); \
  template std::vector<T> Residual<T>(std::span<const T>, const LpcCoeffs<T>&);

CLCNET_LPC_INSTANTIATE(double)
CLCNET_LPC_INSTANTIATE(Complex)

#undef CLCNET_LPC_INSTANTIATE

}  // namespace clcnet::lpc
