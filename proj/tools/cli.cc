#include "cli.h"

#include <CLI11.hpp>

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include "clcnet/clc.h"
#include "clcnet/filterbank.h"
#include "clcnet/metrics.h"
#include "clcnet/wav.h"

namespace clcnet::cli {
namespace fs = std::filesystem;

namespace {

ConfigField NoiseKindsField(std::string key, std::vector<NoiseKind>* v) {
  return {key, "synthetic noise kinds (white,pink,babble,hum)",
          [v] {
            std::string s;
            for (size_t i = 0; i < v->size(); ++i) {
              s += (i ? "," : "") + std::string(NoiseKindName((*v)[i]));
            }
            return s;
          },
          [v](const std::string& s) {
            std::vector<NoiseKind> kinds;
            std::stringstream ss(s);
            std::string item;
            while (std::getline(ss, item, ',')) {
              const size_t a = item.find_first_not_of(' ');
              const size_t b = item.find_last_not_of(' ');
              if (a == std::string::npos) throw ConfigError("empty noise kind in '" + s + "'");
              kinds.push_back(ParseNoiseKind(item.substr(a, b - a + 1)));
            }
            *v = kinds;
          }};
}

void Append(std::vector<ConfigField>& to, std::vector<ConfigField> from) {
  for (auto& f : from) to.push_back(std::move(f));
}

std::ofstream OpenOut(const fs::path& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw DataError("cannot write " + path.string());
  return os;
}

std::string JoinDoubles(const std::vector<double>& v) {
  std::string s;
  for (size_t i = 0; i < v.size(); ++i) s += (i ? ";" : "") + FormatDouble(v[i]);
  return s;
}

std::string JoinStrings(const std::vector<std::string>& v) {
  std::string s;
  for (size_t i = 0; i < v.size(); ++i) s += (i ? ";" : "") + v[i];
  return s;
}

// Shared by every subcommand.
struct CommonOptions {
  std::string config_file;
  std::vector<std::string> overrides;
};

void AddCommon(CLI::App* app, CommonOptions& o) {
  app->add_option("--config", o.config_file, "settings file (key = value, [section] headers)");
  app->add_option("--set", o.overrides, "override a setting, key=value (repeatable)");
}

RunConfig ResolveConfig(const CommonOptions& o) {
  RunConfig config;
  auto fields = config.Fields();
  if (!o.config_file.empty()) ApplySettings(ReadSettingsFile(o.config_file), fields);
  Settings cli;
  for (const std::string& kv : o.overrides) {
    const size_t eq = kv.find('=');
    if (eq == std::string::npos) throw ConfigError("--set expects key=value, got '" + kv + "'");
    auto trim = [](std::string s) {
      const size_t a = s.find_first_not_of(" \t");
      const size_t b = s.find_last_not_of(" \t");
      return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
    };
    cli.emplace_back(trim(kv.substr(0, eq)), trim(kv.substr(eq + 1)));
  }
  ApplySettings(cli, fields);
  return config;
}

void WriteEcho(const fs::path& dir, RunConfig& config) {
  fs::create_directories(dir);
  OpenOut(dir / "config.echo") << config.Echo();
}

// ---------------------------------------------------------------------------

struct MixOptions {
  CommonOptions common;
  std::string out_dir;
  size_t count = 10;
  std::optional<uint64_t> seed;
  std::optional<double> snr;
  std::string split = "test";
};

int RunMix(MixOptions& o, std::ostream& out) {
  RunConfig config = ResolveConfig(o.common);
  if (o.seed) config.data.mix_seed = *o.seed;
  if (o.snr) config.mix.snr_set = {*o.snr};
  const CorpusWithSplit corpus = LoadRunCorpus(config);
  const SplitIds& ids = corpus.split.Get(ParseSplit(o.split));
  const fs::path dir(o.out_dir);
  WriteEcho(dir, config);

  std::ofstream manifest = OpenOut(dir / "manifest.csv");
  manifest << "id,speech_id,noise_ids,snr_db,level_offsets_db,delta_snr_t_db,seed\n";
  Rng rng(config.data.mix_seed ^ Fnv1a64("mix"));
  for (size_t i = 0; i < o.count; ++i) {
    const MixtureSpec spec = SampleSpec(rng, ids, config.mix);
    const Mixture m = MakeMixture(spec, corpus.corpus);
    char id[32];
    std::snprintf(id, sizeof(id), "mix_%04zu", i);
    WriteWav((dir / (std::string(id) + "_noisy.wav")).string(), m.noisy);
    WriteWav((dir / (std::string(id) + "_clean.wav")).string(), m.clean);
    WriteWav((dir / (std::string(id) + "_target.wav")).string(), m.target);
    manifest << id << ',' << spec.speech_id << ',' << JoinStrings(spec.noise_ids) << ','
             << FormatDouble(spec.snr_db) << ',' << JoinDoubles(spec.level_offsets_db) << ','
             << FormatDouble(spec.delta_snr_t_db) << ',' << spec.seed << '\n';
  }
  if (!manifest) throw DataError("write failed for " + (dir / "manifest.csv").string());
  out << "wrote " << o.count << " mixtures to " << dir.string() << '\n';
  return 0;
}

// ---------------------------------------------------------------------------

struct TrainOptions {
  CommonOptions common;
  std::string name = "default";
  std::optional<int> offset;
  std::optional<uint64_t> seed;
  std::optional<size_t> steps;
  std::optional<size_t> threads;
  bool resume = false;
};

int RunTrain(TrainOptions& o, std::ostream& out) {
  RunConfig config = ResolveConfig(o.common);
  if (o.offset) config.model.offset = *o.offset;
  if (o.seed) config.train.seed = *o.seed;
  if (o.steps) config.train.max_steps = *o.steps;
  if (o.threads) config.train.threads = *o.threads;
  config.model.Validate();
  config.train.Validate();

  const fs::path run_dir = fs::path(RunRoot()) / o.name;
  const fs::path last = run_dir / "checkpoints" / "last.ckpt";
  const CorpusWithSplit corpus = LoadRunCorpus(config);
  const auto start = std::chrono::steady_clock::now();

  std::optional<Trainer> trainer;
  if (o.resume && fs::exists(last)) {
    Checkpoint c = Checkpoint::Load(last.string());
    c.train.max_steps = config.train.max_steps;
    c.train.threads = config.train.threads;
    out << "resuming " << run_dir.string() << " at step " << c.adam.step << '\n';
    config.model = c.model;
    config.train = c.train;
    config.mix = c.mix;
    trainer.emplace(c, corpus.corpus, corpus.split);
  } else {
    trainer.emplace(config.model, config.train, config.mix, corpus.corpus, corpus.split);
  }
  WriteEcho(run_dir, config);
  out << "run " << run_dir.string() << ": " << config.model.ParameterCount()
      << " parameters, offset " << config.model.offset << '\n';
  for (const TrainLogRow& row : trainer->Run(run_dir.string())) {
    if (row.has_val) {
      out << "step " << row.step << " loss " << FormatDouble(row.loss) << " val_loss "
          << FormatDouble(row.val_loss) << " val_sisdr " << FormatDouble(row.val_sisdr)
          << '\n';
    }
  }
  const double seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  out << "done: best val loss " << FormatDouble(trainer->best_val_loss()) << " in "
      << seconds << " s\n";
  return 0;
}

// ---------------------------------------------------------------------------

struct EnhanceOptions {
  CommonOptions common;
  std::string checkpoint;
  std::string input;
  std::string output;
  std::string format = "float32";
};

int RunEnhance(EnhanceOptions& o, std::ostream& out) {
  ResolveConfig(o.common);
  const Checkpoint c = Checkpoint::Load(o.checkpoint);
  const Model model = c.MakeModel();
  const Waveform in = ReadWavStrict(o.input, c.model.sample_rate);
  StreamingEnhancer enhancer(model);
  std::vector<double> y;
  enhancer.Process(in.samples, y);
  const FilterBank bank = c.model.MakeBank();
  out << "algorithmic latency " << AlgorithmicLatencyMs(c.model.offset, bank)
      << " ms at offset " << c.model.offset << "; streaming delay "
      << enhancer.delay_samples() << " samples ("
      << 1000.0 * enhancer.delay_samples() / c.model.sample_rate << " ms)\n";
  WriteWav(o.output, Waveform(std::move(y), in.sample_rate),
           o.format == "pcm16" ? WavFormat::kPcm16 : WavFormat::kFloat32);
  return 0;
}

// ---------------------------------------------------------------------------

struct EvaluateOptions {
  CommonOptions common;
  std::string checkpoint;
  std::string oracle;
  std::string out_dir;
  std::string split = "test";
  std::optional<uint64_t> seed;
  std::optional<size_t> count;
};

std::vector<double> OracleEnhance(const std::string& mode, const Mixture& m,
                                  const RunConfig& config) {
  const FilterBank bank = config.model.MakeBank();
  const Spectrogram noisy = bank.Analyze(m.noisy);
  const Spectrogram clean = bank.Analyze(m.clean);
  Spectrogram est;
  if (mode == "wf") {
    est = ApplyMask(noisy, OracleWienerGain(clean, bank.Analyze(m.noise)));
  } else if (mode == "iam") {
    est = ApplyMask(noisy, OracleMasks(clean, noisy).iam);
  } else if (mode == "cirm") {
    est = ApplyComplexMask(noisy, OracleMasks(clean, noisy).cirm);
  } else {
    OracleClcOptions opt;
    opt.order = config.model.order;
    opt.offset = config.model.offset;
    opt.window = config.metrics.oracle_window;
    opt.ridge = config.metrics.oracle_ridge;
    est = ApplyClc(noisy, OracleClcCoeffs(noisy, clean, opt));
  }
  return bank.Synthesize(est, m.noisy.size()).samples;
}

int RunEvaluate(EvaluateOptions& o, std::ostream& out) {
  RunConfig config = ResolveConfig(o.common);
  if (o.seed) config.metrics.seed = *o.seed;
  if (o.count) config.metrics.items_per_bucket = *o.count;
  if (o.checkpoint.empty() == o.oracle.empty()) {
    throw ConfigError("evaluate needs exactly one of --checkpoint or --oracle");
  }
  std::optional<Model> model;
  if (!o.checkpoint.empty()) {
    const Checkpoint c = Checkpoint::Load(o.checkpoint);
    config.model = c.model;
    model.emplace(c.MakeModel());
  }
  const CorpusWithSplit corpus = LoadRunCorpus(config);
  const SplitIds& ids = corpus.split.Get(ParseSplit(o.split));
  if (ids.speech.empty() || ids.noise.empty()) throw DataError("evaluate: empty split " + o.split);

  EvalOptions opt;
  opt.edge_samples = config.metrics.edge_samples;
  opt.si_sdr_cap_db = config.metrics.si_sdr_cap_db;
  Rng rng(config.metrics.seed ^ Fnv1a64("evaluate"));
  std::vector<EvalItem> items;
  for (double snr : config.metrics.buckets) {
    for (size_t i = 0; i < config.metrics.items_per_bucket; ++i) {
      MixtureSpec spec = SampleSpec(rng, ids, config.mix);
      spec.snr_db = snr;
      const Mixture m = MakeMixture(spec, corpus.corpus);
      EvalItem item;
      item.id = spec.speech_id + "+" + JoinStrings(spec.noise_ids) + "@" + FormatDouble(snr);
      item.snr_db = snr;
      item.clean = m.clean;
      item.noisy = m.noisy;
      if (model) {
        StreamingEnhancer enhancer(*model);
        std::vector<double> y;
        enhancer.Process(m.noisy.samples, y);
        opt.delay_samples = enhancer.delay_samples();
        item.enhanced = Waveform(std::move(y), m.noisy.sample_rate);
      } else {
        item.enhanced = Waveform(OracleEnhance(o.oracle, m, config), m.noisy.sample_rate);
      }
      items.push_back(std::move(item));
    }
  }
  const EvalReport report = Evaluate(items, opt);
  const fs::path dir(o.out_dir);
  WriteEcho(dir, config);
  std::ofstream rows = OpenOut(dir / "rows.csv");
  report.WriteRowsCsv(rows);
  std::ofstream buckets = OpenOut(dir / "buckets.csv");
  report.WriteBucketsCsv(buckets);
  for (const BucketSummary& b : report.buckets) {
    out << "snr " << FormatDouble(b.snr_db) << " dB: si_sdr " << b.si_sdr.mean
        << " (noisy " << b.si_sdr_noisy.mean << "), delta_stoi " << b.delta_stoi.mean << '\n';
  }
  return 0;
}

// ---------------------------------------------------------------------------

struct ExportOptions {
  CommonOptions common;
  std::string input;
  std::string output;
  double floor_db = -120.0;
};

int RunExportSpec(ExportOptions& o, std::ostream& out) {
  const RunConfig config = ResolveConfig(o.common);
  const FilterBank bank = config.model.MakeBank();
  const Waveform in = ReadWavStrict(o.input, bank.sample_rate());
  const Spectrogram s = bank.Analyze(in);
  std::ofstream csv = OpenOut(o.output);
  csv << "frame";
  for (size_t f = 0; f < s.num_processed_bins(); ++f) csv << ",bin_" << f;
  csv << '\n';
  for (size_t k = 0; k < s.num_frames(); ++k) {
    csv << k;
    for (size_t f = 0; f < s.num_processed_bins(); ++f) {
      const double p = std::norm(s.at(k, f));
      const double db = p > 0.0 ? std::max(10.0 * std::log10(p), o.floor_db) : o.floor_db;
      csv << ',' << FormatDouble(db);
    }
    csv << '\n';
  }
  out << "wrote " << s.num_frames() << " x " << s.num_processed_bins() << " power grid\n";
  return 0;
}

}  // namespace

std::vector<ConfigField> RunConfig::Fields() {
  std::vector<ConfigField> f = ModelFields(model);
  Append(f, TrainFields(train));
  Append(f, MixFields(mix));
  SyntheticCorpusConfig& s = data.synthetic;
  Append(f, {
      StringField("data.corpus", &data.corpus, "'synthetic' or a directory with speech/ and noise/"),
      DoubleField("data.train_fraction", &data.train_fraction, "hash split share for train"),
      DoubleField("data.validation_fraction", &data.validation_fraction,
                  "hash split share for validation"),
      U64Field("data.mix_seed", &data.mix_seed, "seed for the mix command"),
      U64Field("data.synthetic_seed", &s.seed, "synthetic corpus seed"),
      SizeField("data.synthetic_speech_train", &s.speech_train, "synthetic train utterances"),
      SizeField("data.synthetic_speech_validation", &s.speech_validation,
                "synthetic validation utterances"),
      SizeField("data.synthetic_speech_test", &s.speech_test, "synthetic test utterances"),
      SizeField("data.synthetic_noise_train", &s.noise_train, "synthetic train noises"),
      SizeField("data.synthetic_noise_validation", &s.noise_validation,
                "synthetic validation noises"),
      SizeField("data.synthetic_noise_test", &s.noise_test, "synthetic test noises"),
      DoubleField("data.synthetic_speech_seconds", &s.speech_seconds, "utterance length"),
      DoubleField("data.synthetic_noise_seconds", &s.noise_seconds, "noise length"),
      DoubleField("data.synthetic_f0_min_hz", &s.speech.f0_min_hz, "lowest synthetic f0"),
      DoubleField("data.synthetic_f0_max_hz", &s.speech.f0_max_hz, "highest synthetic f0"),
      NoiseKindsField("data.synthetic_noise_kinds", &s.noise_kinds),
      DoubleListField("metrics.buckets", &metrics.buckets, "evaluation SNR buckets in dB"),
      SizeField("metrics.items_per_bucket", &metrics.items_per_bucket, "mixtures per bucket"),
      SizeField("metrics.edge_samples", &metrics.edge_samples, "samples trimmed at both ends"),
      DoubleField("metrics.si_sdr_cap_db", &metrics.si_sdr_cap_db, "SI-SDR cap"),
      U64Field("metrics.seed", &metrics.seed, "evaluation mixture seed"),
      SizeField("metrics.oracle_window", &metrics.oracle_window, "oracle CLC fit window (frames)"),
      DoubleField("metrics.oracle_ridge", &metrics.oracle_ridge, "oracle CLC ridge"),
  });
  return f;
}

std::string RunConfig::Echo() { return FormatFields(Fields()); }

CorpusWithSplit LoadRunCorpus(const RunConfig& config) {
  if (config.data.corpus == "synthetic") {
    SyntheticCorpusConfig s = config.data.synthetic;
    s.speech.sample_rate = config.model.sample_rate;
    return MakeSyntheticCorpus(s);
  }
  return LoadCorpus(config.data.corpus, config.model.sample_rate, config.data.train_fraction,
                    config.data.validation_fraction);
}

std::string RunRoot() {
  const char* env = std::getenv("CLC_RUN_DIR");
  return env && *env ? env : "runs";
}

int Main(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app("Low-latency speech enhancement with complex linear coding.", "clcnet");
  app.require_subcommand(1);
  {
    RunConfig defaults;
    std::string footer = "\nSettings (key = default  # meaning):\n";
    for (const ConfigField& f : defaults.Fields()) {
      footer += "  " + f.key + " = " + f.get() + (f.help.empty() ? "" : "  # " + f.help) + "\n";
    }
    footer += "\nExit codes: 0 ok, 1 usage/config, 2 data, 3 numeric.\n"
              "CLC_RUN_DIR overrides the run root (default ./runs).\n";
    app.footer(footer);
  }

  MixOptions mix;
  auto* mix_cmd = app.add_subcommand("mix", "write noisy/clean/target WAV triples and a manifest");
  AddCommon(mix_cmd, mix.common);
  mix_cmd->add_option("--out", mix.out_dir, "output directory")->required();
  mix_cmd->add_option("--count", mix.count, "number of mixtures")->capture_default_str();
  mix_cmd->add_option("--seed", mix.seed, "mixing seed (data.mix_seed)");
  mix_cmd->add_option("--snr", mix.snr, "use this SNR only");
  mix_cmd->add_option("--split", mix.split, "train|validation|test")->capture_default_str();

  TrainOptions train;
  auto* train_cmd = app.add_subcommand("train", "train a model into <run root>/<name>");
  AddCommon(train_cmd, train.common);
  train_cmd->add_option("--name", train.name, "run name")->capture_default_str();
  train_cmd->add_option("--offset", train.offset, "CLC offset l (model.offset)");
  train_cmd->add_option("--seed", train.seed, "train.seed");
  train_cmd->add_option("--steps", train.steps, "train.max_steps");
  train_cmd->add_option("--threads", train.threads, "worker threads (1 = reference path)");
  train_cmd->add_flag("--resume", train.resume, "continue from checkpoints/last.ckpt if present");

  EnhanceOptions enhance;
  auto* enhance_cmd = app.add_subcommand("enhance", "stream a WAV file through a trained model");
  AddCommon(enhance_cmd, enhance.common);
  enhance_cmd->add_option("--checkpoint", enhance.checkpoint, "checkpoint file")->required();
  enhance_cmd->add_option("--in", enhance.input, "input WAV")->required();
  enhance_cmd->add_option("--out", enhance.output, "output WAV")->required();
  enhance_cmd->add_option("--format", enhance.format, "float32|pcm16")
      ->check(CLI::IsMember({"float32", "pcm16"}))
      ->capture_default_str();

  EvaluateOptions evaluate;
  auto* eval_cmd = app.add_subcommand("evaluate", "SI-SDR / STOI report per SNR bucket");
  AddCommon(eval_cmd, evaluate.common);
  eval_cmd->add_option("--checkpoint", evaluate.checkpoint, "checkpoint to evaluate");
  eval_cmd->add_option("--oracle", evaluate.oracle, "oracle baseline instead of a model")
      ->check(CLI::IsMember({"wf", "clc", "iam", "cirm"}));
  eval_cmd->add_option("--out", evaluate.out_dir, "output directory")->required();
  eval_cmd->add_option("--split", evaluate.split, "train|validation|test")->capture_default_str();
  eval_cmd->add_option("--seed", evaluate.seed, "metrics.seed");
  eval_cmd->add_option("--count", evaluate.count, "metrics.items_per_bucket");

  ExportOptions exp;
  auto* exp_cmd = app.add_subcommand("export-spec", "dB power spectrogram of a WAV file as CSV");
  AddCommon(exp_cmd, exp.common);
  exp_cmd->add_option("--in", exp.input, "input WAV")->required();
  exp_cmd->add_option("--out", exp.output, "output CSV")->required();
  exp_cmd->add_option("--floor-db", exp.floor_db, "value used for zero power")
      ->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 1;
  }

  try {
    if (*mix_cmd) return RunMix(mix, out);
    if (*train_cmd) return RunTrain(train, out);
    if (*enhance_cmd) return RunEnhance(enhance, out);
    if (*eval_cmd) return RunEvaluate(evaluate, out);
    if (*exp_cmd) return RunExportSpec(exp, out);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return 1;
  } catch (const DataError& e) {
    err << "data error: " << e.what() << '\n';
    return 2;
  } catch (const NumericError& e) {
    err << "numeric error: " << e.what() << '\n';
    return 3;
  } catch (const std::filesystem::filesystem_error& e) {
    err << "data error: " << e.what() << '\n';
    return 2;
  }
  return 1;
}

}  // namespace clcnet::cli
