// End-to-end training of the coefficient predictor on (noisy, target) pairs
// drawn from a corpus, checkpointing and resume.
//
// Each step draws batch_size mixtures from the training split, crops a
// random snippet from each and minimizes
//
//   loss = w_rmse * RMSE(target, y) + w_sdr * (-SI-SDR(target, y) / 10)
//
// over the samples that only depend on frames with full context, i.e. frames
// lookback .. F - 1 - future_frames. Gradients are averaged over the batch
// and applied with Adam.
//
// Checkpoint layout (all integers and floats little-endian):
//   8 bytes  magic "CLCNETCK"
//   u32      format version (1)
//   u64      length of the config text, then the text itself: `key = value`
//            lines with the model, train and data settings plus the trainer
//            state (step, rng_state, best_val_loss, best_step)
//   u64      parameter count P
//   f64[P]   parameters, f64[P] Adam first moments, f64[P] second moments

#ifndef CLCNET_TRAIN_H_
#define CLCNET_TRAIN_H_

#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "clcnet/config.h"
#include "clcnet/data.h"
#include "clcnet/model.h"

namespace clcnet {

struct TrainConfig {
  double learning_rate = 3e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_epsilon = 1e-8;
  size_t batch_size = 8;
  size_t max_steps = 20000;
  uint64_t seed = 1;
  double w_rmse = 1.0;
  double w_sdr = 1.0;
  double snippet_s = 2.0;
  size_t val_every = 100;
  size_t val_items = 16;
  size_t checkpoint_every = 100;
  // Worker threads for per-item gradients. Results do not depend on it:
  // gradients are summed in item order.
  size_t threads = 1;

  void Validate() const;
  AdamConfig adam() const {
    return {learning_rate, beta1, beta2, adam_epsilon};
  }
};

// Keys under `train.`.
std::vector<ConfigField> TrainFields(TrainConfig& c);
// Keys under `data.` for the mixing recipe.
std::vector<ConfigField> MixFields(MixConfig& c);

struct LossBreakdown {
  double loss = 0.0;
  double rmse = 0.0;
  double neg_sisdr = 0.0;  // -SI-SDR in dB
  std::vector<double> grad;  // dloss/dy, full output length
};

// Loss over samples [begin, end) of y against the target; the gradient is
// zero outside the range.
LossBreakdown RegionLoss(std::span<const double> target,
                         std::span<const double> y, size_t begin, size_t end,
                         const TrainConfig& config);

// Sample range with full context for a signal of num_samples samples. Throws
// DataError when it is empty.
std::pair<size_t, size_t> LossRegion(const ModelConfig& config,
                                     size_t num_samples);

struct Checkpoint {
  ModelConfig model;
  TrainConfig train;
  MixConfig mix;
  std::vector<double> params;
  AdamState adam;
  std::string rng_state;
  double best_val_loss = std::numeric_limits<double>::infinity();
  uint64_t best_step = 0;

  std::string Serialize() const;
  // Throws DataError for a bad magic, version or truncated data.
  static Checkpoint Deserialize(const std::string& bytes);
  void Save(const std::string& path) const;
  static Checkpoint Load(const std::string& path);
  Model MakeModel() const;
};

struct TrainLogRow {
  uint64_t step = 0;
  double loss = 0.0;
  double rmse = 0.0;
  double neg_sisdr = 0.0;
  bool has_val = false;
  double val_loss = 0.0;
  double val_sisdr = 0.0;
};

struct ValidationResult {
  double loss = 0.0;
  double sisdr = 0.0;  // mean SI-SDR(target, y) in dB
};

// Training state machine. Deterministic for a given corpus and configs.
class Trainer {
 public:
  // Fresh start: parameters initialized from train.seed.
  Trainer(const ModelConfig& model_config, const TrainConfig& train_config,
          const MixConfig& mix_config, const Corpus& corpus,
          const CorpusSplit& split);
  // Resume. Geometry and corpus must match what the checkpoint was trained on.
  Trainer(const Checkpoint& checkpoint, const Corpus& corpus,
          const CorpusSplit& split);

  // One optimizer step. Throws NumericError on a non-finite loss.
  TrainLogRow Step();
  ValidationResult Validate();

  Checkpoint MakeCheckpoint() const;
  const Model& model() const { return model_; }
  uint64_t step() const { return adam_.step; }
  double best_val_loss() const { return best_val_loss_; }
  const TrainConfig& train_config() const { return train_; }

  // Runs until max_steps, validating every val_every steps and at the end.
  // With a non-empty run_dir writes logs/train.csv, logs/val.csv,
  // checkpoints/last.ckpt (every checkpoint_every steps and at the end) and
  // checkpoints/best.ckpt (on each validation improvement). Logs are
  // appended when resuming. Returns the rows produced by this call.
  std::vector<TrainLogRow> Run(const std::string& run_dir = "");

 private:
  void BuildValidationSet();

  ModelConfig model_config_;
  TrainConfig train_;
  MixConfig mix_;
  const Corpus& corpus_;
  CorpusSplit split_;
  Model model_;
  AdamState adam_;
  Rng rng_;
  double best_val_loss_ = std::numeric_limits<double>::infinity();
  uint64_t best_step_ = 0;
  std::vector<std::pair<std::vector<double>, std::vector<double>>> val_set_;
};

}  // namespace clcnet

#endif  // CLCNET_TRAIN_H_
