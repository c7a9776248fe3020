#include "clcnet/train.h"

#include <bit>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <thread>

#include "clcnet/metrics.h"

namespace clcnet {
namespace {

constexpr char kMagic[8] = {'C', 'L', 'C', 'N', 'E', 'T', 'C', 'K'};
constexpr uint32_t kVersion = 1;

static_assert(std::endian::native == std::endian::little,
              "checkpoint I/O assumes a little-endian host");

template <typename T>
void Put(std::string& out, T v) {
  char buf[sizeof(T)];
  std::memcpy(buf, &v, sizeof(T));
  out.append(buf, sizeof(T));
}

class Reader {
 public:
  explicit Reader(const std::string& bytes) : bytes_(bytes) {}

  template <typename T>
  T Get() {
    Need(sizeof(T));
    T v;
    std::memcpy(&v, bytes_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return v;
  }
  std::string Text(size_t n) {
    Need(n);
    std::string s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  void Doubles(std::vector<double>& out, size_t n) {
    Need(n * sizeof(double));
    out.resize(n);
    std::memcpy(out.data(), bytes_.data() + pos_, n * sizeof(double));
    pos_ += n * sizeof(double);
  }
  bool AtEnd() const { return pos_ == bytes_.size(); }

 private:
  void Need(size_t n) const {
    if (bytes_.size() - pos_ < n) throw DataError("checkpoint: truncated file");
  }
  const std::string& bytes_;
  size_t pos_ = 0;
};

// Fields for the trainer state stored alongside the configs.
std::vector<ConfigField> StateFields(Checkpoint& c) {
  std::vector<ConfigField> fields = {
      U64Field("state.step", &c.adam.step),
      StringField("state.rng_state", &c.rng_state),
      U64Field("state.best_step", &c.best_step),
  };
  fields.push_back({"state.best_val_loss", "",
                    [&c] {
                      return std::isinf(c.best_val_loss) ? std::string("inf")
                                                         : FormatDouble(c.best_val_loss);
                    },
                    [&c](const std::string& s) {
                      c.best_val_loss = s == "inf" ? std::numeric_limits<double>::infinity()
                                                   : ParseDouble(s, "state.best_val_loss");
                    }});
  return fields;
}

std::vector<ConfigField> AllFields(Checkpoint& c) {
  std::vector<ConfigField> fields = ModelFields(c.model);
  for (auto& f : TrainFields(c.train)) fields.push_back(std::move(f));
  for (auto& f : MixFields(c.mix)) fields.push_back(std::move(f));
  for (auto& f : StateFields(c)) fields.push_back(std::move(f));
  return fields;
}

void WriteFile(const std::string& path, const std::string& bytes) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw DataError("cannot write " + tmp);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw DataError("write failed for " + tmp);
  }
  std::filesystem::rename(tmp, path);
}

}  // namespace

void TrainConfig::Validate() const {
  if (!(learning_rate > 0.0)) throw ConfigError("train.learning_rate must be positive");
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) {
    throw ConfigError("train.beta1 and train.beta2 must lie in [0, 1)");
  }
  if (!(adam_epsilon > 0.0)) throw ConfigError("train.adam_epsilon must be positive");
  if (batch_size == 0) throw ConfigError("train.batch_size must be positive");
  if (!(snippet_s > 0.0)) throw ConfigError("train.snippet_s must be positive");
  if (val_every == 0 || checkpoint_every == 0) {
    throw ConfigError("train.val_every and train.checkpoint_every must be positive");
  }
  if (val_items == 0) throw ConfigError("train.val_items must be positive");
  if (threads == 0) throw ConfigError("train.threads must be positive");
  if (w_rmse < 0.0 || w_sdr < 0.0) throw ConfigError("loss weights must be non-negative");
}

std::vector<ConfigField> TrainFields(TrainConfig& c) {
  return {
      DoubleField("train.learning_rate", &c.learning_rate, "Adam learning rate"),
      DoubleField("train.beta1", &c.beta1, "Adam beta1"),
      DoubleField("train.beta2", &c.beta2, "Adam beta2"),
      DoubleField("train.adam_epsilon", &c.adam_epsilon, "Adam epsilon"),
      SizeField("train.batch_size", &c.batch_size, "mixtures per step"),
      SizeField("train.max_steps", &c.max_steps, "optimizer steps"),
      U64Field("train.seed", &c.seed, "initialization and sampling seed"),
      DoubleField("train.w_rmse", &c.w_rmse, "RMSE loss weight"),
      DoubleField("train.w_sdr", &c.w_sdr, "-SI-SDR/10 loss weight"),
      DoubleField("train.snippet_s", &c.snippet_s, "training snippet length"),
      SizeField("train.val_every", &c.val_every, "steps between validations"),
      SizeField("train.val_items", &c.val_items, "validation mixtures"),
      SizeField("train.checkpoint_every", &c.checkpoint_every,
                "steps between last-checkpoint writes"),
  };
}

std::vector<ConfigField> MixFields(MixConfig& c) {
  return {
      DoubleListField("data.snr_set", &c.snr_set, "mixture SNRs in dB"),
      DoubleListField("data.offset_set", &c.offset_set, "per-noise level offsets in dB"),
      SizeField("data.max_noises", &c.max_noises, "maximum simultaneous noises"),
      DoubleField("data.delta_snr_t_db", &c.delta_snr_t_db,
                  "noise attenuation of the training target"),
  };
}

std::pair<size_t, size_t> LossRegion(const ModelConfig& config, size_t num_samples) {
  const FilterBank bank = config.MakeBank();
  const size_t frames = bank.NumFrames(num_samples);
  const size_t first = config.lookback_frames();
  const size_t future = config.future_frames();
  if (frames < first + future + 1) {
    throw DataError("signal of " + std::to_string(num_samples) +
                    " samples is too short for the model context");
  }
  const size_t last = frames - 1 - future;
  const size_t hop = bank.hop();
  return {hop * (first + 1), std::min(num_samples, hop * (last + 1))};
}

LossBreakdown RegionLoss(std::span<const double> target, std::span<const double> y,
                         size_t begin, size_t end, const TrainConfig& config) {
  if (target.size() != y.size() || begin >= end || end > y.size()) {
    throw ConfigError("loss: invalid region or length mismatch");
  }
  const auto ref = target.subspan(begin, end - begin);
  const auto est = y.subspan(begin, end - begin);
  const LossValue rmse = RmseLoss(ref, est);
  const LossValue sdr = SiSdrLoss(ref, est);
  LossBreakdown out;
  out.rmse = rmse.value;
  out.neg_sisdr = -sdr.value;
  out.loss = config.w_rmse * rmse.value - config.w_sdr * sdr.value / 10.0;
  out.grad.assign(y.size(), 0.0);
  for (size_t i = 0; i < ref.size(); ++i) {
    out.grad[begin + i] = config.w_rmse * rmse.grad[i] - config.w_sdr * sdr.grad[i] / 10.0;
  }
  return out;
}

// ---------------------------------------------------------------------------

std::string Checkpoint::Serialize() const {
  Checkpoint copy = *this;
  const std::string text = FormatFields(AllFields(copy));
  const size_t n = params.size();
  if (adam.m.size() != n || adam.v.size() != n) {
    throw ConfigError("checkpoint: moment sizes do not match the parameters");
  }
  std::string out(kMagic, sizeof(kMagic));
  Put<uint32_t>(out, kVersion);
  Put<uint64_t>(out, text.size());
  out += text;
  Put<uint64_t>(out, n);
  for (const auto* arr : {&params, &adam.m, &adam.v}) {
    out.append(reinterpret_cast<const char*>(arr->data()), n * sizeof(double));
  }
  return out;
}

Checkpoint Checkpoint::Deserialize(const std::string& bytes) {
  Reader r(bytes);
  if (r.Text(sizeof(kMagic)) != std::string(kMagic, sizeof(kMagic))) {
    throw DataError("checkpoint: bad magic bytes");
  }
  const uint32_t version = r.Get<uint32_t>();
  if (version != kVersion) {
    throw DataError("checkpoint: unsupported format version " + std::to_string(version));
  }
  Checkpoint c;
  const std::string text = r.Text(r.Get<uint64_t>());
  auto fields = AllFields(c);
  try {
    ApplySettings(ParseSettings(text, "checkpoint"), fields);
  } catch (const ConfigError& e) {
    throw DataError(std::string("checkpoint: ") + e.what());
  }
  const uint64_t n = r.Get<uint64_t>();
  r.Doubles(c.params, n);
  r.Doubles(c.adam.m, n);
  r.Doubles(c.adam.v, n);
  if (!r.AtEnd()) throw DataError("checkpoint: trailing bytes");
  if (n != c.model.ParameterCount()) {
    throw DataError("checkpoint: " + std::to_string(n) + " parameters, config implies " +
                    std::to_string(c.model.ParameterCount()));
  }
  return c;
}

void Checkpoint::Save(const std::string& path) const { WriteFile(path, Serialize()); }

Checkpoint Checkpoint::Load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open checkpoint " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return Deserialize(ss.str());
}

Model Checkpoint::MakeModel() const {
  Model m(model);
  m.params() = params;
  return m;
}

// ---------------------------------------------------------------------------

Trainer::Trainer(const ModelConfig& model_config, const TrainConfig& train_config,
                 const MixConfig& mix_config, const Corpus& corpus,
                 const CorpusSplit& split)
    : model_config_(model_config),
      train_(train_config),
      mix_(mix_config),
      corpus_(corpus),
      split_(split),
      model_(model_config),
      adam_(model_.params().size()),
      rng_(train_config.seed) {
  train_.Validate();
  model_.InitRandom(rng_);
  BuildValidationSet();
}

Trainer::Trainer(const Checkpoint& checkpoint, const Corpus& corpus,
                 const CorpusSplit& split)
    : model_config_(checkpoint.model),
      train_(checkpoint.train),
      mix_(checkpoint.mix),
      corpus_(corpus),
      split_(split),
      model_(checkpoint.MakeModel()),
      adam_(checkpoint.adam),
      best_val_loss_(checkpoint.best_val_loss),
      best_step_(checkpoint.best_step) {
  train_.Validate();
  rng_.LoadState(checkpoint.rng_state);
  BuildValidationSet();
}

void Trainer::BuildValidationSet() {
  Rng rng(train_.seed ^ Fnv1a64("validation"));
  const SplitIds& ids = split_.validation;
  val_set_.clear();
  for (size_t i = 0; i < train_.val_items; ++i) {
    const Mixture mix = MakeMixture(SampleSpec(rng, ids, mix_), corpus_);
    val_set_.emplace_back(mix.noisy.samples, mix.target.samples);
  }
}

TrainLogRow Trainer::Step() {
  const size_t batch = train_.batch_size;
  const SplitIds& ids = split_.train;
  const size_t snippet =
      static_cast<size_t>(std::lround(train_.snippet_s * model_config_.sample_rate));
  std::vector<std::pair<std::vector<double>, std::vector<double>>> items;
  for (size_t b = 0; b < batch; ++b) {
    const Mixture mix = MakeMixture(SampleSpec(rng_, ids, mix_), corpus_);
    const size_t len = mix.noisy.size();
    const size_t n = std::min(len, snippet);
    const size_t start = len > n ? rng_.UniformInt(len - n + 1) : 0;
    items.emplace_back(
        std::vector<double>(mix.noisy.samples.begin() + start,
                            mix.noisy.samples.begin() + start + n),
        std::vector<double>(mix.target.samples.begin() + start,
                            mix.target.samples.begin() + start + n));
  }

  std::vector<LossBreakdown> losses(batch);
  std::vector<std::vector<double>> grads(batch);
  std::vector<std::exception_ptr> errors(batch);
  auto work = [&](size_t b) {
    try {
      const auto& [noisy, target] = items[b];
      const ForwardTape tape = RunForward(model_, noisy);
      const auto [begin, end] = LossRegion(model_config_, noisy.size());
      losses[b] = RegionLoss(target, tape.output, begin, end, train_);
      grads[b] = Backward(model_, tape, losses[b].grad);
      losses[b].grad.clear();
    } catch (...) {
      errors[b] = std::current_exception();
    }
  };
  const size_t workers = std::min(train_.threads, batch);
  if (workers <= 1) {
    for (size_t b = 0; b < batch; ++b) work(b);
  } else {
    std::vector<std::thread> pool;
    for (size_t t = 0; t < workers; ++t) {
      pool.emplace_back([&, t] {
        for (size_t b = t; b < batch; b += workers) work(b);
      });
    }
    for (auto& th : pool) th.join();
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }

  TrainLogRow row;
  std::vector<double> total(model_.params().size(), 0.0);
  for (size_t b = 0; b < batch; ++b) {
    row.loss += losses[b].loss / batch;
    row.rmse += losses[b].rmse / batch;
    row.neg_sisdr += losses[b].neg_sisdr / batch;
    for (size_t i = 0; i < total.size(); ++i) total[i] += grads[b][i] / batch;
  }
  if (!std::isfinite(row.loss)) {
    throw NumericError("train: non-finite loss at step " + std::to_string(adam_.step + 1));
  }
  AdamStep(model_.params(), total, adam_, train_.adam());
  row.step = adam_.step;
  return row;
}

ValidationResult Trainer::Validate() {
  ValidationResult out;
  for (const auto& [noisy, target] : val_set_) {
    const std::vector<double> y = Enhance(model_, noisy);
    const auto [begin, end] = LossRegion(model_config_, noisy.size());
    const LossBreakdown l = RegionLoss(target, y, begin, end, train_);
    out.loss += l.loss / val_set_.size();
    out.sisdr += -l.neg_sisdr / val_set_.size();
  }
  return out;
}

Checkpoint Trainer::MakeCheckpoint() const {
  Checkpoint c;
  c.model = model_config_;
  c.train = train_;
  c.mix = mix_;
  c.params = model_.params();
  c.adam = adam_;
  c.rng_state = rng_.SaveState();
  c.best_val_loss = best_val_loss_;
  c.best_step = best_step_;
  return c;
}

namespace {

// Keeps the header and the rows up to `step`, dropping rows written after the
// checkpoint a run is resumed from.
void TruncateLog(const std::filesystem::path& path, uint64_t step) {
  std::ifstream in(path);
  if (!in) return;
  std::string kept, line;
  bool header = true;
  while (std::getline(in, line)) {
    if (header || std::stoull(line.substr(0, line.find(','))) <= step) {
      kept += line + '\n';
    }
    header = false;
  }
  in.close();
  std::ofstream(path, std::ios::trunc) << kept;
}

}  // namespace

std::vector<TrainLogRow> Trainer::Run(const std::string& run_dir) {
  namespace fs = std::filesystem;
  std::ofstream train_log, val_log;
  fs::path ckpt_dir;
  if (!run_dir.empty()) {
    ckpt_dir = fs::path(run_dir) / "checkpoints";
    const fs::path log_dir = fs::path(run_dir) / "logs";
    fs::create_directories(ckpt_dir);
    fs::create_directories(log_dir);
    const bool fresh = adam_.step == 0;
    if (!fresh) {
      TruncateLog(log_dir / "train.csv", adam_.step);
      TruncateLog(log_dir / "val.csv", adam_.step);
    }
    const auto mode = fresh ? std::ios::trunc : std::ios::app;
    train_log.open(log_dir / "train.csv", std::ios::out | mode);
    val_log.open(log_dir / "val.csv", std::ios::out | mode);
    if (!train_log || !val_log) throw DataError("cannot open logs in " + log_dir.string());
    if (fresh) {
      train_log << "step,loss,rmse,neg_sisdr,val_sisdr\n";
      val_log << "step,val_loss,val_sisdr\n";
    }
  }
  std::vector<TrainLogRow> rows;
  while (adam_.step < train_.max_steps) {
    TrainLogRow row = Step();
    const bool last = adam_.step == train_.max_steps;
    if (adam_.step % train_.val_every == 0 || last) {
      const ValidationResult val = Validate();
      row.has_val = true;
      row.val_loss = val.loss;
      row.val_sisdr = val.sisdr;
      if (val.loss < best_val_loss_) {
        best_val_loss_ = val.loss;
        best_step_ = adam_.step;
        if (!run_dir.empty()) MakeCheckpoint().Save((ckpt_dir / "best.ckpt").string());
      }
    }
    if (!run_dir.empty()) {
      train_log << row.step << ',' << FormatDouble(row.loss) << ','
                << FormatDouble(row.rmse) << ',' << FormatDouble(row.neg_sisdr) << ','
                << (row.has_val ? FormatDouble(row.val_sisdr) : "") << '\n';
      if (row.has_val) {
        val_log << row.step << ',' << FormatDouble(row.val_loss) << ','
                << FormatDouble(row.val_sisdr) << '\n';
      }
      if (adam_.step % train_.checkpoint_every == 0 || last) {
        train_log.flush();
        val_log.flush();
        MakeCheckpoint().Save((ckpt_dir / "last.ckpt").string());
      }
    }
    rows.push_back(row);
  }
  return rows;
}

}  // namespace clcnet
