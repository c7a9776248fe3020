#include "clcnet/model.h"

#include <algorithm>
#include <cmath>

namespace clcnet {
namespace {

size_t WholeFrames(double ms, double hop_ms, const char* what) {
  const double frames = ms / hop_ms;
  const double rounded = std::round(frames);
  if (ms < 0.0 || std::abs(frames - rounded) > 1e-9 * std::max(1.0, frames)) {
    throw ConfigError(std::string("model.") + what + " = " + FormatDouble(ms) +
                      " ms is not a non-negative multiple of the " +
                      FormatDouble(hop_ms) + " ms hop");
  }
  return static_cast<size_t>(rounded);
}

using RowMap = Eigen::Map<Model::RowMatrix>;

// Splits the head into a coefficient tensor.
CoeffTensor HeadToCoeffs(const Eigen::MatrixXd& head, const ModelConfig& c) {
  const size_t frames = static_cast<size_t>(head.cols());
  CoeffTensor a(frames, c.num_bins(), c.order, c.offset);
  const size_t per_frame = c.num_bins() * (c.order + 1);
  for (size_t k = 0; k < frames; ++k) {
    std::span<Complex> dst = a.frame(k);
    for (size_t j = 0; j < per_frame; ++j) {
      dst[j] = Complex(head(2 * j, k), head(2 * j + 1, k));
    }
  }
  return a;
}

void CheckFinite(std::span<const double> x, const char* what) {
  for (size_t i = 0; i < x.size(); ++i) {
    if (!std::isfinite(x[i])) {
      throw DataError(std::string(what) + ": non-finite sample at index " +
                      std::to_string(i));
    }
  }
}

}  // namespace

void ModelConfig::Validate() const {
  if (frame_len < 4 || frame_len % 2 != 0) {
    throw ConfigError("model.frame_len must be even and >= 4");
  }
  if (!(sample_rate > 0.0)) throw ConfigError("model.sample_rate must be positive");
  if (offset < -1) throw ConfigError("model.offset must be >= -1");
  for (size_t h : hidden_sizes) {
    if (h == 0) throw ConfigError("model.hidden_sizes entries must be positive");
  }
  if (!(norm.time_constant_s > 0.0) || !(norm.epsilon > 0.0)) {
    throw ConfigError("model.norm_time_constant_s and model.norm_epsilon must be positive");
  }
  lookback_frames();
  lookahead_frames();
}

double ModelConfig::hop_ms() const { return 1000.0 * (frame_len / 2) / sample_rate; }

size_t ModelConfig::lookback_frames() const {
  return WholeFrames(lookback_ms, hop_ms(), "lookback_ms");
}

size_t ModelConfig::lookahead_frames() const {
  return WholeFrames(lookahead_ms, hop_ms(), "lookahead_ms");
}

size_t ModelConfig::future_frames() const {
  return std::max<size_t>(lookahead_frames(), static_cast<size_t>(std::max(offset, 0)));
}

std::vector<size_t> ModelConfig::layer_sizes() const {
  std::vector<size_t> sizes = {input_size()};
  sizes.insert(sizes.end(), hidden_sizes.begin(), hidden_sizes.end());
  sizes.push_back(output_size());
  return sizes;
}

size_t ModelConfig::ParameterCount() const {
  const std::vector<size_t> d = layer_sizes();
  size_t count = num_bins();
  for (size_t j = 0; j + 1 < d.size(); ++j) count += (d[j] + 1) * d[j + 1];
  return count;
}

size_t ModelConfig::StreamingDelaySamples() const {
  return frame_len + future_frames() * (frame_len / 2);
}

std::vector<ConfigField> ModelFields(ModelConfig& c) {
  return {
      SizeListField("model.hidden_sizes", &c.hidden_sizes, "hidden layer widths"),
      SizeField("model.order", &c.order, "CLC order N"),
      IntField("model.offset", &c.offset, "CLC frame offset l (>= -1)"),
      DoubleField("model.lookback_ms", &c.lookback_ms, "feature look-back tau1"),
      DoubleField("model.lookahead_ms", &c.lookahead_ms, "feature look-ahead tau2"),
      SizeField("filterbank.frame_len", &c.frame_len, "filter bank frame length"),
      DoubleField("filterbank.sample_rate", &c.sample_rate, "sample rate in Hz"),
      DoubleField("model.norm_time_constant_s", &c.norm.time_constant_s,
                  "normalization EMA time constant"),
      DoubleField("model.norm_epsilon", &c.norm.epsilon, "normalization floor"),
  };
}

// ---------------------------------------------------------------------------

Model::Model(const ModelConfig& config) : config_(config) {
  config_.Validate();
  const std::vector<size_t> d = config_.layer_sizes();
  size_t pos = 0;
  for (size_t j = 0; j + 1 < d.size(); ++j) {
    weight_offsets_.push_back(pos);
    pos += d[j] * d[j + 1];
    bias_offsets_.push_back(pos);
    pos += d[j + 1];
  }
  gamma_offset_ = pos;
  params_.assign(pos + config_.num_bins(), 0.0);
  std::fill(params_.begin() + gamma_offset_, params_.end(), 1.0);
}

void Model::InitRandom(Rng& rng) {
  const std::vector<size_t> d = config_.layer_sizes();
  for (size_t j = 0; j + 1 < d.size(); ++j) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(d[j]));
    double* w = params_.data() + weight_offsets_[j];
    for (size_t i = 0; i < d[j] * d[j + 1]; ++i) w[i] = rng.Uniform(-bound, bound);
    std::fill_n(params_.data() + bias_offsets_[j], d[j + 1], 0.0);
  }
  std::fill(params_.begin() + gamma_offset_, params_.end(), 1.0);
}

Eigen::Map<const Model::RowMatrix> Model::weight(size_t layer) const {
  const std::vector<size_t> d = config_.layer_sizes();
  return {params_.data() + weight_offsets_[layer],
          static_cast<Eigen::Index>(d[layer + 1]), static_cast<Eigen::Index>(d[layer])};
}

Eigen::Map<const Eigen::VectorXd> Model::bias(size_t layer) const {
  const Eigen::Index n = static_cast<Eigen::Index>(config_.layer_sizes()[layer + 1]);
  return {params_.data() + bias_offsets_[layer], n};
}

std::span<const double> Model::gamma() const {
  return {params_.data() + gamma_offset_, config_.num_bins()};
}

// ---------------------------------------------------------------------------

void Featurize(const Spectrogram& x_norm, size_t k, const ModelConfig& config,
               std::span<double> out) {
  const size_t bins = config.num_bins();
  const size_t back = config.lookback_frames();
  const size_t context = config.context_frames();
  if (out.size() != config.input_size() || x_norm.num_processed_bins() != bins) {
    throw ConfigError("featurize: geometry mismatch");
  }
  for (size_t j = 0; j < context; ++j) {
    const ptrdiff_t frame = static_cast<ptrdiff_t>(k + j) - static_cast<ptrdiff_t>(back);
    double* dst = out.data() + j * bins * 2;
    if (frame < 0 || frame >= static_cast<ptrdiff_t>(x_norm.num_frames())) {
      std::fill_n(dst, bins * 2, 0.0);
      continue;
    }
    for (size_t f = 0; f < bins; ++f) {
      const Complex v = x_norm.at(static_cast<size_t>(frame), f);
      dst[2 * f] = v.real();
      dst[2 * f + 1] = v.imag();
    }
  }
}

Eigen::MatrixXd FeaturizeAll(const Spectrogram& x_norm, const ModelConfig& config) {
  Eigen::MatrixXd features(config.input_size(), x_norm.num_frames());
  for (size_t k = 0; k < x_norm.num_frames(); ++k) {
    Featurize(x_norm, k, config,
              std::span<double>(features.col(k).data(), config.input_size()));
  }
  return features;
}

Eigen::MatrixXd PredictHead(const Model& model, const Eigen::MatrixXd& features) {
  if (static_cast<size_t>(features.rows()) != model.config().input_size()) {
    throw ConfigError("forward: feature length " + std::to_string(features.rows()) +
                      " does not match model input " +
                      std::to_string(model.config().input_size()));
  }
  Eigen::MatrixXd a = features;
  const size_t layers = model.num_layers();
  for (size_t j = 0; j < layers; ++j) {
    Eigen::MatrixXd z = model.weight(j) * a;
    z.colwise() += model.bias(j);
    if (j + 1 < layers) {
      a = z.cwiseMax(0.0);
    } else {
      a = z.array().tanh().matrix();
    }
  }
  return a;
}

ForwardTape RunForward(const Model& model, std::span<const double> noisy,
                       const CoeffTensor* override_coeffs) {
  const ModelConfig& c = model.config();
  CheckFinite(noisy, "enhance");
  const FilterBank bank = c.MakeBank();
  ForwardTape tape;
  tape.x = bank.Analyze(noisy);
  NormState state(c.num_bins(), c.norm.Decay(c.hop_ms() / 1000.0), c.norm.epsilon);
  NormGains gains;
  gains.gamma.assign(model.gamma().begin(), model.gamma().end());
  tape.x_norm = Normalize(tape.x, state, gains, &tape.divisors);

  if (override_coeffs) {
    tape.coeffs = *override_coeffs;
  } else {
    tape.activations.push_back(FeaturizeAll(tape.x_norm, c));
    const size_t layers = model.num_layers();
    for (size_t j = 0; j < layers; ++j) {
      Eigen::MatrixXd z = model.weight(j) * tape.activations.back();
      z.colwise() += model.bias(j);
      if (j + 1 < layers) {
        tape.activations.push_back(z.cwiseMax(0.0));
      } else {
        tape.head = z.array().tanh().matrix();
      }
    }
    tape.coeffs = HeadToCoeffs(tape.head, c);
  }
  tape.enhanced = ApplyClc(tape.x, tape.coeffs);
  tape.output = bank.Synthesize(tape.enhanced, noisy.size()).samples;
  return tape;
}

std::vector<double> Backward(const Model& model, const ForwardTape& tape,
                             std::span<const double> grad_output) {
  const ModelConfig& c = model.config();
  if (tape.activations.empty() || tape.head.size() == 0) {
    throw ConfigError("backward: no recorded network pass");
  }
  if (grad_output.size() != tape.output.size()) {
    throw ConfigError("backward: gradient has " + std::to_string(grad_output.size()) +
                      " samples, output has " + std::to_string(tape.output.size()));
  }
  const FilterBank bank = c.MakeBank();
  const size_t frames = tape.x.num_frames();
  const size_t bins = c.num_bins();
  const size_t taps = c.order + 1;

  // Synthesis and CLC are linear; their adjoints give dL/dA.
  const Spectrogram g_enh = bank.SynthesizeAdjoint(grad_output, frames);
  const CoeffTensor g_a = ClcCoeffGradient(tape.x, g_enh, c.order, c.offset, frames);

  Eigen::MatrixXd g_z(tape.head.rows(), tape.head.cols());
  for (size_t k = 0; k < frames; ++k) {
    std::span<const Complex> g = g_a.frame(k);
    for (size_t j = 0; j < bins * taps; ++j) {
      g_z(2 * j, k) = g[j].real();
      g_z(2 * j + 1, k) = g[j].imag();
    }
  }
  g_z.array() *= 1.0 - tape.head.array().square();

  std::vector<double> grads(model.params().size(), 0.0);
  const std::vector<size_t> d = c.layer_sizes();
  for (size_t j = model.num_layers(); j-- > 0;) {
    RowMap g_w(grads.data() + model.weight_offset(j), static_cast<Eigen::Index>(d[j + 1]),
               static_cast<Eigen::Index>(d[j]));
    g_w.noalias() = g_z * tape.activations[j].transpose();
    Eigen::Map<Eigen::VectorXd>(grads.data() + model.bias_offset(j),
                                static_cast<Eigen::Index>(d[j + 1])) = g_z.rowwise().sum();
    Eigen::MatrixXd g_a_prev = model.weight(j).transpose() * g_z;
    if (j > 0) {
      g_a_prev.array() *= (tape.activations[j].array() > 0.0).cast<double>();
    }
    g_z = std::move(g_a_prev);
  }

  // g_z now holds dL/dfeatures. Fold the context windows back onto frames,
  // then through X_n = X * gamma / mu.
  const size_t back = c.lookback_frames();
  const size_t context = c.context_frames();
  double* g_gamma = grads.data() + model.gamma_offset();
  for (size_t k = 0; k < frames; ++k) {
    for (size_t j = 0; j < context; ++j) {
      const ptrdiff_t frame = static_cast<ptrdiff_t>(k + j) - static_cast<ptrdiff_t>(back);
      if (frame < 0 || frame >= static_cast<ptrdiff_t>(frames)) continue;
      const size_t fr = static_cast<size_t>(frame);
      for (size_t f = 0; f < bins; ++f) {
        const Complex x = tape.x.at(fr, f);
        const double mu = tape.divisors[fr * bins + f];
        const size_t row = (j * bins + f) * 2;
        g_gamma[f] += (g_z(row, k) * x.real() + g_z(row + 1, k) * x.imag()) / mu;
      }
    }
  }
  return grads;
}

std::vector<double> Enhance(const Model& model, std::span<const double> noisy) {
  const ModelConfig& c = model.config();
  CheckFinite(noisy, "enhance");
  const FilterBank bank = c.MakeBank();
  const Spectrogram x = bank.Analyze(noisy);
  NormState state(c.num_bins(), c.norm.Decay(c.hop_ms() / 1000.0), c.norm.epsilon);
  NormGains gains;
  gains.gamma.assign(model.gamma().begin(), model.gamma().end());
  const Spectrogram x_norm = Normalize(x, state, gains);

  constexpr size_t kChunk = 256;
  const size_t frames = x.num_frames();
  CoeffTensor a(frames, c.num_bins(), c.order, c.offset);
  Eigen::MatrixXd features(c.input_size(), kChunk);
  for (size_t start = 0; start < frames; start += kChunk) {
    const size_t n = std::min(kChunk, frames - start);
    features.conservativeResize(Eigen::NoChange, static_cast<Eigen::Index>(n));
    for (size_t k = 0; k < n; ++k) {
      Featurize(x_norm, start + k, c,
                std::span<double>(features.col(k).data(), c.input_size()));
    }
    const CoeffTensor part = HeadToCoeffs(PredictHead(model, features), c);
    std::copy(part.data().begin(), part.data().end(),
              a.data().begin() + start * c.num_bins() * (c.order + 1));
  }
  return bank.Synthesize(ApplyClc(x, a), noisy.size()).samples;
}

// ---------------------------------------------------------------------------

StreamingEnhancer::StreamingEnhancer(const Model& model)
    : model_(model),
      config_(model.config()),
      analyzer_(config_.MakeBank()),
      synthesizer_(config_.MakeBank()),
      norm_(config_.num_bins(), config_.norm.Decay(config_.hop_ms() / 1000.0),
            config_.norm.epsilon),
      delay_(config_.StreamingDelaySamples()),
      queue_(delay_, 0.0),
      feature_(config_.input_size()) {
  // History depth: the feature window reaches lookback + future frames into
  // the past, the CLC taps at most order + 1 + future frames.
  const size_t depth =
      std::max(config_.lookback_frames(), config_.order + 1) + config_.future_frames() + 1;
  raw_.assign(depth, std::vector<Complex>(config_.frame_len / 2 + 1));
  norm_frames_.assign(depth, std::vector<Complex>(config_.num_bins()));
}

void StreamingEnhancer::Process(std::span<const double> in,
                                std::vector<double>& out) {
  CheckFinite(in, "enhance");
  for (size_t pos = 0; pos < in.size();) {
    // Push at most one hop at a time so each completed frame is consumed
    // before the next one arrives.
    const size_t n = std::min(in.size() - pos, config_.frame_len / 2);
    pending_.clear();
    analyzer_.Push(in.subspan(pos, n), pending_);
    for (auto& frame : pending_) {
      std::rotate(raw_.rbegin(), raw_.rbegin() + 1, raw_.rend());
      std::rotate(norm_frames_.rbegin(), norm_frames_.rbegin() + 1, norm_frames_.rend());
      raw_[0] = std::move(frame);
      norm_.Update(raw_[0]);
      for (size_t f = 0; f < config_.num_bins(); ++f) {
        norm_frames_[0][f] = raw_[0][f] * (model_.gamma()[f] / norm_.Mu(f));
      }
      ++frames_in_;
      if (frames_in_ > config_.future_frames()) EmitFrame();
    }
    pos += n;
  }
  out.reserve(out.size() + in.size());
  for (size_t i = 0; i < in.size(); ++i) out.push_back(queue_[queue_head_ + i]);
  queue_head_ += in.size();
  if (queue_head_ > 4096) {
    queue_.erase(queue_.begin(), queue_.begin() + static_cast<ptrdiff_t>(queue_head_));
    queue_head_ = 0;
  }
}

void StreamingEnhancer::EmitFrame() {
  const size_t bins = config_.num_bins();
  const size_t future = config_.future_frames();
  const size_t back = config_.lookback_frames();
  const size_t k = frames_in_ - 1 - future;
  // Frame m sits at history index frames_in_ - 1 - m.
  auto history = [&](ptrdiff_t m) -> ptrdiff_t {
    if (m < 0) return -1;
    return static_cast<ptrdiff_t>(frames_in_) - 1 - m;
  };
  for (size_t j = 0; j < config_.context_frames(); ++j) {
    const ptrdiff_t idx = history(static_cast<ptrdiff_t>(k + j) - static_cast<ptrdiff_t>(back));
    for (size_t f = 0; f < bins; ++f) {
      const Complex v = idx < 0 ? Complex() : norm_frames_[idx][f];
      feature_[(j * bins + f) * 2] = v.real();
      feature_[(j * bins + f) * 2 + 1] = v.imag();
    }
  }
  const Eigen::MatrixXd head = PredictHead(model_, feature_);
  const size_t taps = config_.order + 1;
  std::vector<Complex> enhanced(bins + 1);
  for (size_t f = 0; f < bins; ++f) {
    Complex acc = 0.0;
    for (size_t i = 0; i < taps; ++i) {
      const ptrdiff_t idx = history(static_cast<ptrdiff_t>(k) - static_cast<ptrdiff_t>(i) +
                                    config_.offset);
      if (idx < 0) continue;
      const size_t h = (f * taps + i) * 2;
      acc += Complex(head(h, 0), head(h + 1, 0)) * raw_[idx][f];
    }
    enhanced[f] = acc;
  }
  enhanced[bins] = raw_[history(static_cast<ptrdiff_t>(k))][bins];
  synthesizer_.Push(enhanced, queue_);
}

// ---------------------------------------------------------------------------

void AdamStep(std::span<double> params, std::span<const double> grads,
              AdamState& state, const AdamConfig& config) {
  if (grads.size() != params.size() || state.m.size() != params.size() ||
      state.v.size() != params.size()) {
    throw ConfigError("adam: size mismatch between parameters, gradients and moments");
  }
  if (!(config.learning_rate > 0.0)) throw ConfigError("adam: learning rate must be positive");
  for (size_t i = 0; i < grads.size(); ++i) {
    if (!std::isfinite(grads[i])) {
      throw NumericError("adam: non-finite gradient " + FormatDouble(grads[i]) +
                         " at parameter " + std::to_string(i) + " (step " +
                         std::to_string(state.step + 1) + ")");
    }
  }
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double c1 = 1.0 - std::pow(config.beta1, t);
  const double c2 = 1.0 - std::pow(config.beta2, t);
  for (size_t i = 0; i < params.size(); ++i) {
    state.m[i] = config.beta1 * state.m[i] + (1.0 - config.beta1) * grads[i];
    state.v[i] = config.beta2 * state.v[i] + (1.0 - config.beta2) * grads[i] * grads[i];
    const double m_hat = state.m[i] / c1;
    const double v_hat = state.v[i] / c2;
    params[i] -= config.learning_rate * m_hat / (std::sqrt(v_hat) + config.epsilon);
  }
}

}  // namespace clcnet
