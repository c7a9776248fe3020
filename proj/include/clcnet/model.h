// CLC coefficient predictor and the known-operator pipeline around it.
//
//   noisy --analysis--> X --normalize--> X_n --featurize--> MLP --tanh--> A
//   enhanced = synthesis(ApplyClc(X, A))
//
// The MLP has ReLU hidden layers and a linear output layer followed by tanh.
// Its output for frame k holds the (N + 1) complex coefficients of every
// processed band as (re, im) pairs in CoeffTensor order, so the output width
// is 2 * bins * (N + 1). CLC runs on the unnormalized spectrogram X; the
// normalization only conditions the network input.
//
// Parameters live in one flat vector, in this order:
//   for each layer j: W_j (rows = outputs, row-major), then b_j
//   gamma (one gain per processed band)
// so the count is sum_j (d_j + 1) * d_{j+1} + bins with
// d_0 = 2 * bins * (lookback + 1 + lookahead) and d_last = 2 * bins * (N + 1).

#ifndef CLCNET_MODEL_H_
#define CLCNET_MODEL_H_

#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "clcnet/clc.h"
#include "clcnet/config.h"
#include "clcnet/filterbank.h"
#include "clcnet/signal.h"

namespace clcnet {

struct ModelConfig {
  std::vector<size_t> hidden_sizes = {512, 512, 512};
  size_t order = kDefaultOrder;
  int offset = kDefaultOffset;
  // Context in milliseconds; both must be whole multiples of the hop.
  double lookback_ms = 200.0;
  double lookahead_ms = 2.0;
  size_t frame_len = kDefaultFrameLen;
  double sample_rate = kDefaultSampleRate;
  NormConfig norm;

  // Throws ConfigError for inconsistent geometry.
  void Validate() const;

  FilterBank MakeBank() const { return FilterBank(frame_len, sample_rate); }
  double hop_ms() const;
  size_t num_bins() const { return frame_len / 2; }
  size_t lookback_frames() const;
  size_t lookahead_frames() const;
  size_t context_frames() const {
    return lookback_frames() + 1 + lookahead_frames();
  }
  // Future frames needed before frame k can be produced: max(l, tau2, 0).
  size_t future_frames() const;
  size_t input_size() const { return 2 * num_bins() * context_frames(); }
  size_t output_size() const { return 2 * num_bins() * (order + 1); }
  // Layer widths d_0 .. d_last.
  std::vector<size_t> layer_sizes() const;
  size_t ParameterCount() const;
  // End-to-end delay of the streaming enhancer in samples:
  // frame_len + future_frames() * hop.
  size_t StreamingDelaySamples() const;
};

// Keys under `filterbank.` (frame length, sample rate) and `model.`.
std::vector<ConfigField> ModelFields(ModelConfig& c);

class Model {
 public:
  // All weights and biases zero, gamma one.
  explicit Model(const ModelConfig& config);

  // Weights uniform in +-1/sqrt(fan_in), biases zero, gamma one.
  void InitRandom(Rng& rng);

  const ModelConfig& config() const { return config_; }
  std::vector<double>& params() { return params_; }
  const std::vector<double>& params() const { return params_; }
  size_t num_layers() const { return weight_offsets_.size(); }

  // Views into the flat vector.
  using RowMatrix =
      Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  Eigen::Map<const RowMatrix> weight(size_t layer) const;
  Eigen::Map<const Eigen::VectorXd> bias(size_t layer) const;
  std::span<const double> gamma() const;
  size_t weight_offset(size_t layer) const { return weight_offsets_[layer]; }
  size_t bias_offset(size_t layer) const { return bias_offsets_[layer]; }
  size_t gamma_offset() const { return gamma_offset_; }

 private:
  ModelConfig config_;
  std::vector<double> params_;
  std::vector<size_t> weight_offsets_;
  std::vector<size_t> bias_offsets_;
  size_t gamma_offset_ = 0;
};

// Feature vector of frame k from the normalized spectrogram: frames
// k - lookback .. k + lookahead (zero outside the spectrogram), each frame
// contributing the processed bands as (re, im) pairs. Element
// ((j * bins) + f) * 2 + {0: re, 1: im} comes from frame k - lookback + j.
void Featurize(const Spectrogram& x_norm, size_t k, const ModelConfig& config,
               std::span<double> out);
// input_size() x frames, column k = Featurize(k).
Eigen::MatrixXd FeaturizeAll(const Spectrogram& x_norm,
                             const ModelConfig& config);

// Network head for a batch of feature columns: tanh outputs,
// output_size() x columns. Throws ConfigError on a width mismatch.
Eigen::MatrixXd PredictHead(const Model& model,
                            const Eigen::MatrixXd& features);

// Recorded forward pass for one signal.
struct ForwardTape {
  Spectrogram x;
  std::vector<double> divisors;  // mu(k, f), frames x bins
  Spectrogram x_norm;
  // activations[0] = features, then the post-ReLU hidden outputs.
  std::vector<Eigen::MatrixXd> activations;
  Eigen::MatrixXd head;  // tanh outputs
  CoeffTensor coeffs;
  Spectrogram enhanced;
  std::vector<double> output;  // same length as the input
};

// Runs analysis, normalization, featurization, the network, CLC and
// synthesis. With `override_coeffs` the network output is replaced by the
// given coefficients (same CLC and synthesis code path); no backward pass is
// possible then.
ForwardTape RunForward(const Model& model, std::span<const double> noisy,
                       const CoeffTensor* override_coeffs = nullptr);

// Reverse-mode gradient of a scalar loss w.r.t. every parameter, given
// dL/dy for the output samples. The normalization divisors depend only on
// the input and are constants here. Throws ConfigError if the tape has no
// recorded network pass or the gradient length is wrong.
std::vector<double> Backward(const Model& model, const ForwardTape& tape,
                             std::span<const double> grad_output);

// Offline enhancement, output length = input length, no delay. Processes
// frames in chunks so memory stays bounded for long inputs.
std::vector<double> Enhance(const Model& model, std::span<const double> noisy);

// Sample-synchronous streaming enhancement. Every input sample produces one
// output sample and out[t] = Enhance(in)[t - StreamingDelaySamples()] (zero
// before the delay).
class StreamingEnhancer {
 public:
  explicit StreamingEnhancer(const Model& model);

  void Process(std::span<const double> in, std::vector<double>& out);
  size_t delay_samples() const { return delay_; }

 private:
  void EmitFrame();

  const Model& model_;
  ModelConfig config_;
  StreamingAnalyzer analyzer_;
  StreamingSynthesizer synthesizer_;
  NormState norm_;
  size_t delay_;
  size_t frames_in_ = 0;
  // Most recent raw and normalized frames; index 0 is frame frames_in_ - 1.
  std::vector<std::vector<Complex>> raw_;
  std::vector<std::vector<Complex>> norm_frames_;
  std::vector<double> queue_;
  size_t queue_head_ = 0;
  std::vector<std::vector<Complex>> pending_;
  std::vector<double> block_;
  Eigen::VectorXd feature_;
};

// ---------------------------------------------------------------------------
// Optimizer

struct AdamConfig {
  double learning_rate = 3e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct AdamState {
  std::vector<double> m;
  std::vector<double> v;
  uint64_t step = 0;

  AdamState() = default;
  explicit AdamState(size_t n) : m(n, 0.0), v(n, 0.0) {}
};

// Bias-corrected Adam update. Throws NumericError naming the first
// non-finite gradient entry, and ConfigError on size mismatch or a
// non-positive learning rate. Nothing is modified when it throws.
void AdamStep(std::span<double> params, std::span<const double> grads,
              AdamState& state, const AdamConfig& config);

}  // namespace clcnet

#endif  // CLCNET_MODEL_H_
