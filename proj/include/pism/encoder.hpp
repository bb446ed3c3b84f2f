#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "pism/tensor.hpp"

namespace pism {

enum class Variant { kFull, kFixed };
enum class Mode { kTrain, kEval };

struct EncoderConfig {
  int bands = 0;
  int k = 0;
  std::vector<int> hidden = {512, 1024, 512, 256};
  double sigma_floor = 0.0;  // 0 -> defaulted to 0.01 * bands by init
  double leaky_slope = 0.01;
  double bn_eps = 1e-5;
  double bn_momentum = 0.1;
  Variant variant = Variant::kFull;

  // width of the final dense layer: 4k heads, or k scale heads when the
  // component shapes come from the shared bank
  int latent_width() const { return variant == Variant::kFull ? 4 * k : k; }
};

struct DenseLayer {
  Matrix w;               // in x out
  std::vector<double> b;  // out
};

struct BatchNormLayer {
  std::vector<double> gamma, beta, running_mean, running_var;
};

// Pixel-wise encoder: dense layers with batch norm + LeakyReLU after every
// hidden layer, the final layer feeding the bounded heads directly.
struct EncoderModel {
  EncoderConfig cfg;
  std::uint64_t seed = 0;
  int epoch = 0;
  std::vector<DenseLayer> layers;  // hidden.size() + 1
  std::vector<BatchNormLayer> bn;  // hidden.size()
  std::vector<double> bank;        // 3k raw logits (mu|sigma|alpha), kFixed only

  std::size_t parameter_count() const;  // trainable scalars
  void validate() const;
};

// Weights U(+-sqrt(6/fan_in)), biases 0, BN gamma=1 beta=0, running mean 0
// var 1; bank logits U(-2, 2). Deterministic in the seed.
EncoderModel init_encoder(std::uint64_t seed, int bands, int k);
EncoderModel init_encoder(std::uint64_t seed, const EncoderConfig& cfg);

struct ForwardCache {
  Mode mode = Mode::kEval;
  int batch = 0;
  Matrix input;
  std::vector<Matrix> z, y, a;  // per hidden layer: pre-BN, post-BN, post-act
  std::vector<std::vector<double>> mean, invstd;
  Matrix z_final;  // batch x latent_width
  Matrix params;   // batch x 4k activated
};

// Activated component parameters per pixel, batch x 4k, row layout
// [mu | sigma | alpha | s]. Train mode normalizes with batch statistics
// (batch >= 2) and, when update_running is set, folds them into the running
// estimates; eval mode is a pure function using the running statistics.
Matrix forward(EncoderModel& model, const Matrix& batch, Mode mode,
               ForwardCache* cache = nullptr, bool update_running = true);

struct EncoderGradients {
  std::vector<Matrix> dw;
  std::vector<std::vector<double>> db, dgamma, dbeta;
  std::vector<double> dbank;
};

// Backpropagates batch x 4k upstream gradients on the activated parameters
// through heads, dense layers and train-mode batch norm. Requires the cache
// of a train-mode forward.
EncoderGradients backward(const EncoderModel& model, const ForwardCache& cache,
                          const Matrix& dparams);

// Activated shared-bank component shapes (kFixed variant).
void bank_activate(const EncoderModel& model, std::vector<double>* mu,
                   std::vector<double>* sigma, std::vector<double>* alpha);

// Checkpoint: JSON manifest + one raw little-endian float32 file per tensor
// in the manifest's directory. Save/load round-trips are byte-exact.
void save_checkpoint(const EncoderModel& model,
                     const std::filesystem::path& manifest_path);
EncoderModel load_checkpoint(const std::filesystem::path& manifest_path);

}  // namespace pism
