#include "clcnet/clc.h"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <string>

namespace clcnet {
namespace {

using CMatrix = Eigen::Matrix<Complex, Eigen::Dynamic, Eigen::Dynamic>;
using CVector = Eigen::Matrix<Complex, Eigen::Dynamic, 1>;

// x(j) with zero extension outside [0, size).
inline Complex Tap(std::span<const Complex> x, long j) {
  return (j < 0 || j >= static_cast<long>(x.size())) ? Complex{} : x[j];
}

void CheckSameGeometry(const Spectrogram& a, const Spectrogram& b,
                       const char* what) {
  if (!a.SameGeometry(b)) {
    throw ConfigError(std::string(what) + ": spectrogram geometries differ (" +
                      std::to_string(a.num_frames()) + "x" +
                      std::to_string(a.num_bins()) + " vs " +
                      std::to_string(b.num_frames()) + "x" +
                      std::to_string(b.num_bins()) + ")");
  }
}

std::vector<Complex> Column(const Spectrogram& s, size_t f) {
  std::vector<Complex> col(s.num_frames());
  for (size_t k = 0; k < s.num_frames(); ++k) col[k] = s.at(k, f);
  return col;
}

}  // namespace

CoeffTensor::CoeffTensor(size_t num_frames, size_t num_bins, size_t order,
                         int offset)
    : num_frames_(num_frames),
      num_bins_(num_bins),
      order_(order),
      offset_(offset),
      data_(num_frames * num_bins * (order + 1)) {
  if (offset < -1) {
    throw ConfigError("clc: offset must be >= -1, got " + std::to_string(offset));
  }
}

double NormConfig::Decay(double hop_seconds) const {
  if (!(time_constant_s > 0.0)) {
    throw ConfigError("normalization: time constant must be positive");
  }
  return std::exp(-hop_seconds / time_constant_s);
}

NormState::NormState(size_t num_bins, double decay, double epsilon)
    : accum_(num_bins, 0.0), decay_(decay), epsilon_(epsilon) {
  if (!(decay > 0.0 && decay < 1.0)) {
    throw ConfigError("normalization: decay must lie in (0, 1)");
  }
  if (!(epsilon > 0.0)) {
    throw ConfigError("normalization: epsilon must be positive");
  }
}

void NormState::Update(std::span<const Complex> frame) {
  for (size_t f = 0; f < accum_.size(); ++f) {
    accum_[f] = decay_ * accum_[f] + (1.0 - decay_) * std::abs(frame[f]);
  }
  decay_power_ *= decay_;
  ++frames_seen_;
}

double NormState::Mu(size_t f) const {
  const double correction = 1.0 - decay_power_;
  const double mean = correction > 0.0 ? accum_[f] / correction : 0.0;
  return std::max(mean, epsilon_);
}

Spectrogram Normalize(const Spectrogram& x, NormState& state,
                      const NormGains& gains, std::vector<double>* divisors) {
  const size_t bins = x.num_processed_bins();
  if (state.num_bins() != bins || gains.gamma.size() != bins) {
    throw ConfigError("normalize: expected " + std::to_string(bins) +
                      " processed bands, state has " +
                      std::to_string(state.num_bins()) + " and gains have " +
                      std::to_string(gains.gamma.size()));
  }
  Spectrogram out = x;
  if (divisors) divisors->assign(x.num_frames() * bins, 0.0);
  for (size_t k = 0; k < x.num_frames(); ++k) {
    state.Update(x.frame(k));
    for (size_t f = 0; f < bins; ++f) {
      const double mu = state.Mu(f);
      if (divisors) (*divisors)[k * bins + f] = mu;
      out.at(k, f) = x.at(k, f) * (gains.gamma[f] / mu);
    }
  }
  return out;
}

Spectrogram ApplyClc(const Spectrogram& x, const CoeffTensor& a) {
  const size_t bins = x.num_processed_bins();
  if (a.num_bins() != bins) {
    throw ConfigError("apply_clc: coefficient tensor has " +
                      std::to_string(a.num_bins()) + " bands, spectrogram has " +
                      std::to_string(bins));
  }
  if (a.num_frames() > x.num_frames()) {
    throw ConfigError("apply_clc: more coefficient frames (" +
                      std::to_string(a.num_frames()) + ") than spectrogram frames (" +
                      std::to_string(x.num_frames()) + ")");
  }
  Spectrogram out = x.ZerosLike();
  const long frames = static_cast<long>(x.num_frames());
  const long offset = a.offset();
  for (size_t k = 0; k < x.num_frames(); ++k) {
    for (size_t f = bins; f < x.num_bins(); ++f) out.at(k, f) = x.at(k, f);
  }
  for (size_t k = 0; k < a.num_frames(); ++k) {
    for (size_t f = 0; f < bins; ++f) {
      Complex acc{};
      for (size_t i = 0; i < a.taps(); ++i) {
        const long j = static_cast<long>(k) - static_cast<long>(i) + offset;
        if (j < 0 || j >= frames) continue;
        acc += a.at(k, i, f) * x.at(static_cast<size_t>(j), f);
      }
      out.at(k, f) = acc;
    }
  }
  return out;
}

CoeffTensor ClcCoeffGradient(const Spectrogram& x,
                             const Spectrogram& grad_output, size_t order,
                             int offset, size_t num_frames) {
  const size_t bins = x.num_processed_bins();
  CoeffTensor grad(num_frames, bins, order, offset);
  const long frames = static_cast<long>(x.num_frames());
  for (size_t k = 0; k < num_frames; ++k) {
    for (size_t f = 0; f < bins; ++f) {
      const Complex g = grad_output.at(k, f);
      for (size_t i = 0; i <= order; ++i) {
        const long j = static_cast<long>(k) - static_cast<long>(i) + offset;
        if (j < 0 || j >= frames) continue;
        grad.at(k, i, f) = g * std::conj(x.at(static_cast<size_t>(j), f));
      }
    }
  }
  return grad;
}

WindowFit FitClcWindow(std::span<const Complex> x, std::span<const Complex> s,
                       size_t first, size_t last, size_t order, int offset,
                       double ridge) {
  const Eigen::Index rows = static_cast<Eigen::Index>(last - first + 1);
  const Eigen::Index taps = static_cast<Eigen::Index>(order + 1);
  CMatrix design(rows, taps);
  CVector target(rows);
  double energy = 0.0;
  for (Eigen::Index r = 0; r < rows; ++r) {
    const long j = static_cast<long>(first) + r;
    target(r) = s[j];
    energy += std::norm(x[j]);
    for (Eigen::Index i = 0; i < taps; ++i) {
      design(r, i) = Tap(x, j - i + offset);
    }
  }
  const double lambda = ridge * energy;
  CVector solution;
  bool solved = false;
  if (lambda > 0.0) {
    CMatrix gram = design.adjoint() * design;
    gram.diagonal().array() += lambda;
    Eigen::LLT<CMatrix> llt(gram);
    if (llt.info() == Eigen::Success) {
      solution = llt.solve(design.adjoint() * target);
      solved = true;
    }
  }
  if (!solved) {
    solution = design.completeOrthogonalDecomposition().solve(target);
  }
  WindowFit fit;
  fit.coeffs.assign(solution.data(), solution.data() + solution.size());
  fit.residual = (design * solution - target).squaredNorm();
  return fit;
}

WindowFit FitRealGainWindow(std::span<const Complex> x,
                            std::span<const Complex> s, size_t first,
                            size_t last) {
  double cross = 0.0;
  double energy = 0.0;
  for (size_t j = first; j <= last; ++j) {
    cross += (std::conj(x[j]) * s[j]).real();
    energy += std::norm(x[j]);
  }
  const double gain = energy > 0.0 ? cross / energy : 0.0;
  WindowFit fit;
  fit.coeffs = {Complex(gain, 0.0)};
  for (size_t j = first; j <= last; ++j) fit.residual += std::norm(gain * x[j] - s[j]);
  return fit;
}

CoeffTensor OracleClcCoeffs(const Spectrogram& noisy, const Spectrogram& target,
                            const OracleClcOptions& options) {
  CheckSameGeometry(noisy, target, "oracle_clc_coeffs");
  if (options.window == 0) throw ConfigError("oracle_clc_coeffs: empty window");
  if (options.ridge < 0.0) throw ConfigError("oracle_clc_coeffs: negative ridge");
  const size_t frames = noisy.num_frames();
  const size_t bins = noisy.num_processed_bins();
  CoeffTensor coeffs(frames, bins, options.order, options.offset);
  const size_t half = options.window / 2;
  for (size_t f = 0; f < bins; ++f) {
    const std::vector<Complex> x = Column(noisy, f);
    const std::vector<Complex> s = Column(target, f);
    for (size_t k = 0; k < frames; ++k) {
      // Window of `window` frames centered at k, shifted to stay inside.
      size_t first = k >= half ? k - half : 0;
      size_t last = std::min(frames - 1, first + options.window - 1);
      if (last - first + 1 < options.window && last + 1 >= options.window) {
        first = last + 1 - options.window;
      }
      const WindowFit fit = FitClcWindow(x, s, first, last, options.order,
                                         options.offset, options.ridge);
      for (size_t i = 0; i < coeffs.taps(); ++i) coeffs.at(k, i, f) = fit.coeffs[i];
    }
  }
  return coeffs;
}

RealMask OracleWienerGain(const Spectrogram& speech, const Spectrogram& noise) {
  CheckSameGeometry(speech, noise, "oracle_wiener_gain");
  RealMask gain{speech.num_frames(), speech.num_bins(),
                std::vector<double>(speech.data().size())};
  for (size_t i = 0; i < gain.values.size(); ++i) {
    const double ps = std::norm(speech.data()[i]);
    const double pn = std::norm(noise.data()[i]);
    gain.values[i] = ps + pn > 0.0 ? ps / (ps + pn) : 0.0;
  }
  return gain;
}

OracleMaskSet OracleMasks(const Spectrogram& speech, const Spectrogram& mixture,
                          const MaskOptions& options) {
  CheckSameGeometry(speech, mixture, "oracle_masks");
  OracleMaskSet masks{
      RealMask{speech.num_frames(), speech.num_bins(),
               std::vector<double>(speech.data().size())},
      speech.ZerosLike()};
  for (size_t i = 0; i < speech.data().size(); ++i) {
    const Complex s = speech.data()[i];
    const Complex m = mixture.data()[i];
    const double mag_m = std::abs(m);
    const double floored = std::max(mag_m, options.epsilon);
    masks.iam.values[i] = std::min(std::abs(s) / floored, options.iam_cap);
    masks.cirm.data()[i] =
        mag_m > options.epsilon ? s / m : s * std::conj(m) / (floored * floored);
  }
  return masks;
}

Spectrogram ApplyMask(const Spectrogram& x, const RealMask& mask) {
  if (mask.num_frames != x.num_frames() || mask.num_bins != x.num_bins()) {
    throw ConfigError("apply_mask: mask geometry differs from spectrogram");
  }
  Spectrogram out = x;
  for (size_t i = 0; i < out.data().size(); ++i) out.data()[i] *= mask.values[i];
  return out;
}

Spectrogram ApplyComplexMask(const Spectrogram& x, const Spectrogram& mask) {
  CheckSameGeometry(x, mask, "apply_complex_mask");
  Spectrogram out = x;
  for (size_t i = 0; i < out.data().size(); ++i) out.data()[i] *= mask.data()[i];
  return out;
}

}  // namespace clcnet
