#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <vector>

#include "pism/cube.hpp"
#include "pism/encoder.hpp"

namespace pism {

struct TrainConfig {
  double learning_rate = 1e-4;
  int max_epochs = 50;
  int patience = 5;        // consecutive non-improving epochs tolerated;
                           // 0 stops at the first non-improvement
  int batch_size = 1024;   // pixels
  double huber_delta = 1.0;
  double weight_decay = 0.01;  // decoupled, dense weights only
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
  double validation_fraction = 0.1;
  std::uint64_t seed = 0;
  Variant variant = Variant::kFull;
  std::vector<int> hidden;  // empty -> default widths

  void validate() const;
};

// Per-band Huber averaged over bands:
//   l(e) = e^2/2 for |e| <= delta, else delta*(|e| - delta/2)
// grad[c] = clamp(e_c, -delta, delta) / C
struct HuberResult {
  double loss = 0.0;
  std::vector<double> grad;
};
HuberResult huber_loss(const std::vector<double>& pred,
                       const std::vector<double>& target, double delta);

struct AdamState {
  std::vector<std::vector<double>> m, v;  // one slot per trainable tensor
  long long step = 0;
};

// One AdamW update: bias-corrected moments with the step-size folding
//   theta -= lr * sqrt(1-beta2^t)/(1-beta1^t) * m / (sqrt(v) + eps)
// plus decoupled decay theta -= lr * wd * theta on dense weights.
void adamw_step(EncoderModel& model, const EncoderGradients& grads,
                AdamState& state, const TrainConfig& config);

struct EpochRecord {
  int epoch = 0;
  double train_loss = 0.0;
  double val_loss = 0.0;
  double seconds = 0.0;
};

struct TrainResult {
  EncoderModel model;  // best-validation checkpoint
  std::vector<EpochRecord> log;
  double best_val_loss = 0.0;
  int best_epoch = 0;
};

struct TrainingError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Self-supervised loop: center -> shuffle -> batched forward -> render ->
// Huber -> backward -> AdamW, with a seed-controlled held-out validation
// fraction and early stopping. Deterministic in (cube bytes, config, seed).
TrainResult train_autoencoder(const SpectralCube& cube, const BandMeans& means,
                              const TrainConfig& config, int k);

// Ablation: the encoder emits only the k scales; component shapes
// (mu, sigma, alpha) are a shared trainable bank updated by the same
// optimizer.
TrainResult train_fixed_variant(const SpectralCube& cube,
                                const BandMeans& means,
                                const TrainConfig& config, int k);

// Continue from a checkpoint: epochs resume at model.epoch + 1 with fresh
// optimizer moments (checkpoints store no optimizer state).
TrainResult resume_training(const EncoderModel& start,
                            const SpectralCube& cube, const BandMeans& means,
                            const TrainConfig& config);

void write_train_log_csv(const std::vector<EpochRecord>& log,
                         const std::filesystem::path& path);

}  // namespace pism
