#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "pism/forest.hpp"
#include "pism/trainer.hpp"

// Operator surface behind the CLI. Every command writes a config snapshot
// into its output directory so a run can be reproduced bit-for-bit with the
// same binary. Errors derived from UsageError exit with code 2, anything
// else with 1.

namespace pism::cmd {

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct SynthArgs {
  std::string out_prefix;  // <prefix>.json/.f32 + _truth.csv (+ _labels.csv)
  std::uint64_t seed = 0;
  int pixels = 5000;
  int bands = 16;
  int k = 3;
  int classes = 0;
  double noise_sd = 0.0;
  bool shared_shape = false;
};
void cmd_synth(const SynthArgs& args);

struct TrainArgs {
  std::string cube;  // header path; alternatively synthetic=true
  bool synthetic = false;
  SynthArgs synth;
  int k = 5;
  std::string variant = "full";  // full | fixed
  TrainConfig train;
  std::string out_dir;
  std::string resume;  // checkpoint manifest path
};
void cmd_train(const TrainArgs& args);

struct EvalClsArgs {
  std::string model_dir;  // manifest.json + band_means.csv from cmd_train
  std::string cube;
  std::string labels;
  std::string split;
  std::vector<std::uint64_t> seeds{1};
  ForestParams forest;
  std::string out_dir;
};
void cmd_eval_classification(const EvalClsArgs& args);

struct SweepArgs {
  EvalClsArgs eval;
  std::vector<double> fractions{0.5, 0.1, 0.05, 0.01};
};
void cmd_small_data_sweep(const SweepArgs& args);

struct EvalRegArgs {
  std::string model_dir;
  std::string cube;
  std::string patches;
  std::string targets;
  std::string split;  // patch_id,split
  std::vector<std::uint64_t> seeds{1};
  std::vector<double> baselines;  // empty -> train-mean predictor MSE
  ForestParams forest;
  std::string out_dir;
};
void cmd_eval_regression(const EvalRegArgs& args);

struct DumpArgs {
  std::string model_dir;
  std::string cube;
  std::vector<std::pair<int, int>> pixels;
  std::string out_dir;
};
void cmd_dump_components(const DumpArgs& args);

struct ExportLatentsArgs {
  std::string model_dir;
  std::string cube;
  std::string patches;  // optional: averages rows per patch
  std::string out_csv;
};
void cmd_export_latents(const ExportLatentsArgs& args);

}  // namespace pism::cmd
