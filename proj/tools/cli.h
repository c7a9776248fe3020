// The `clcnet` command-line tool: mix, train, enhance, evaluate, export-spec.
//
// Settings come from built-in defaults, then `--config FILE`, then repeated
// `--set key=value`, then the dedicated flags of each subcommand. Exit codes:
// 0 success, 1 usage or config error, 2 data error, 3 numeric failure.

#ifndef CLCNET_TOOLS_CLI_H_
#define CLCNET_TOOLS_CLI_H_

#include <iosfwd>
#include <string>
#include <vector>

#include "clcnet/config.h"
#include "clcnet/data.h"
#include "clcnet/model.h"
#include "clcnet/train.h"

namespace clcnet::cli {

struct DataConfig {
  // "synthetic" or a directory with speech/ and noise/ subdirectories.
  std::string corpus = "synthetic";
  SyntheticCorpusConfig synthetic;
  double train_fraction = 0.70;
  double validation_fraction = 0.15;
  uint64_t mix_seed = 1;
};

struct MetricsConfig {
  std::vector<double> buckets = {20.0, 10.0, 5.0, 0.0, -5.0};
  size_t items_per_bucket = 4;
  size_t edge_samples = 96;
  double si_sdr_cap_db = 100.0;
  uint64_t seed = 1;
  size_t oracle_window = 9;
  double oracle_ridge = 1e-6;
};

struct RunConfig {
  ModelConfig model;
  TrainConfig train;
  MixConfig mix;
  DataConfig data;
  MetricsConfig metrics;

  std::vector<ConfigField> Fields();
  // Effective settings as `key = value` lines.
  std::string Echo();
};

CorpusWithSplit LoadRunCorpus(const RunConfig& config);

// Root for run directories: $CLC_RUN_DIR if set, else ./runs.
std::string RunRoot();

int Main(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace clcnet::cli

#endif  // CLCNET_TOOLS_CLI_H_
