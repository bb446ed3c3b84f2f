#include "pism/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>

#include "pism/csv.hpp"
#include "pism/kernels.hpp"
#include "pism/rng.hpp"

namespace pism {

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0)) throw std::invalid_argument("learning_rate <= 0");
  if (max_epochs < 1) throw std::invalid_argument("max_epochs < 1");
  if (patience < 0) throw std::invalid_argument("patience < 0");
  if (batch_size < 2) throw std::invalid_argument("batch_size < 2");
  if (!(huber_delta > 0.0)) throw std::invalid_argument("huber_delta <= 0");
  if (weight_decay < 0.0) throw std::invalid_argument("weight_decay < 0");
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) {
    throw std::invalid_argument("betas must be in [0, 1)");
  }
  if (!(adam_eps > 0.0)) throw std::invalid_argument("adam_eps <= 0");
  if (!(validation_fraction > 0.0 && validation_fraction < 1.0)) {
    throw std::invalid_argument("validation_fraction outside (0, 1)");
  }
}

HuberResult huber_loss(const std::vector<double>& pred,
                       const std::vector<double>& target, double delta) {
  if (pred.size() != target.size() || pred.empty()) {
    throw std::invalid_argument("huber_loss: length mismatch");
  }
  if (!(delta > 0.0)) throw std::invalid_argument("huber_loss: delta <= 0");
  HuberResult r;
  r.grad.resize(pred.size());
  kernels::serial::huber_batch(pred.data(), target.data(), 1,
                               static_cast<int>(pred.size()), delta, &r.loss,
                               r.grad.data());
  return r;
}

namespace {

struct ParamSlot {
  double* p;
  const double* g;
  std::size_t n;
  bool decay;
};

std::vector<ParamSlot> param_slots(EncoderModel& model,
                                   const EncoderGradients& grads) {
  const std::size_t n_layers = model.layers.size();
  const std::size_t n_bn = model.bn.size();
  if (grads.dw.size() != n_layers || grads.db.size() != n_layers ||
      grads.dgamma.size() != n_bn || grads.dbeta.size() != n_bn ||
      grads.dbank.size() != model.bank.size()) {
    throw std::invalid_argument("adamw_step: gradient structure mismatch");
  }
  std::vector<ParamSlot> slots;
  for (std::size_t l = 0; l < n_layers; ++l) {
    if (grads.dw[l].size() != model.layers[l].w.size() ||
        grads.db[l].size() != model.layers[l].b.size()) {
      throw std::invalid_argument("adamw_step: gradient shape mismatch");
    }
    slots.push_back({model.layers[l].w.data.data(), grads.dw[l].data.data(),
                     model.layers[l].w.size(), true});
    slots.push_back({model.layers[l].b.data(), grads.db[l].data(),
                     model.layers[l].b.size(), false});
  }
  for (std::size_t l = 0; l < n_bn; ++l) {
    if (grads.dgamma[l].size() != model.bn[l].gamma.size() ||
        grads.dbeta[l].size() != model.bn[l].beta.size()) {
      throw std::invalid_argument("adamw_step: gradient shape mismatch");
    }
    slots.push_back({model.bn[l].gamma.data(), grads.dgamma[l].data(),
                     model.bn[l].gamma.size(), false});
    slots.push_back({model.bn[l].beta.data(), grads.dbeta[l].data(),
                     model.bn[l].beta.size(), false});
  }
  if (!model.bank.empty()) {
    slots.push_back({model.bank.data(), grads.dbank.data(), model.bank.size(),
                     false});
  }
  return slots;
}

}  // namespace

void adamw_step(EncoderModel& model, const EncoderGradients& grads,
                AdamState& state, const TrainConfig& config) {
  const auto slots = param_slots(model, grads);
  if (state.m.empty()) {
    state.m.resize(slots.size());
    state.v.resize(slots.size());
    for (std::size_t i = 0; i < slots.size(); ++i) {
      state.m[i].assign(slots[i].n, 0.0);
      state.v[i].assign(slots[i].n, 0.0);
    }
  }
  if (state.m.size() != slots.size()) {
    throw std::invalid_argument("adamw_step: optimizer state mismatch");
  }

  for (const ParamSlot& s : slots) {
    for (std::size_t i = 0; i < s.n; ++i) {
      if (!std::isfinite(s.g[i])) {
        throw TrainingError("adamw_step: non-finite gradient");
      }
    }
  }

  state.step += 1;
  const double b1 = config.beta1, b2 = config.beta2;
  const double step_size = config.learning_rate *
                           std::sqrt(1.0 - std::pow(b2, state.step)) /
                           (1.0 - std::pow(b1, state.step));
  const double decay = config.learning_rate * config.weight_decay;

  for (std::size_t si = 0; si < slots.size(); ++si) {
    const ParamSlot& s = slots[si];
    double* m = state.m[si].data();
    double* v = state.v[si].data();
    if (state.m[si].size() != s.n) {
      throw std::invalid_argument("adamw_step: optimizer state mismatch");
    }
    const double wd = s.decay ? decay : 0.0;
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(s.n); ++i) {
      const double g = s.g[i];
      m[i] = b1 * m[i] + (1.0 - b1) * g;
      v[i] = b2 * v[i] + (1.0 - b2) * g * g;
      const double p0 = s.p[i];
      s.p[i] = p0 - step_size * m[i] / (std::sqrt(v[i]) + config.adam_eps) -
               wd * p0;
    }
  }
}

namespace {

// gather centered spectra of the listed pixels into rows of a matrix
void gather_batch(const SpectralCube& centered, const std::vector<int>& order,
                  std::size_t begin, std::size_t count, Matrix* out) {
  const int bands = centered.bands;
  const int np = centered.pixels();
  *out = Matrix(static_cast<int>(count), bands);
  for (std::size_t r = 0; r < count; ++r) {
    const int p = order[begin + r];
    double* row = out->row(static_cast<int>(r));
    for (int c = 0; c < bands; ++c) {
      row[c] = centered.values[static_cast<std::size_t>(c) * np + p];
    }
  }
}

double validation_loss(EncoderModel& model, const SpectralCube& centered,
                       const std::vector<int>& val_indices,
                       const std::vector<double>& coords,
                       const TrainConfig& config) {
  const int k = model.cfg.k;
  const int bands = centered.bands;
  double loss_sum = 0.0;
  Matrix batch;
  for (std::size_t at = 0; at < val_indices.size();
       at += static_cast<std::size_t>(config.batch_size)) {
    const std::size_t n = std::min<std::size_t>(config.batch_size,
                                                val_indices.size() - at);
    gather_batch(centered, val_indices, at, n, &batch);
    const Matrix params = forward(model, batch, Mode::kEval);
    Matrix spectra(batch.rows, bands);
    kernels::render_batch(params.data.data(), batch.rows, k, coords.data(),
                          bands, spectra.data.data());
    std::vector<double> losses(batch.rows);
    Matrix dpred(batch.rows, bands);  // unused
    kernels::huber_batch(spectra.data.data(), batch.data.data(), batch.rows,
                         bands, config.huber_delta, losses.data(),
                         dpred.data.data());
    for (const double l : losses) loss_sum += l;
  }
  return loss_sum / static_cast<double>(val_indices.size());
}

TrainResult train_impl(const SpectralCube& cube, const BandMeans& means,
                       const TrainConfig& config, int k,
                       const EncoderModel* start) {
  config.validate();
  cube.validate();
  if (k < 1) throw std::invalid_argument("train: k must be >= 1");
  if (means.means.size() != static_cast<std::size_t>(cube.bands)) {
    throw std::invalid_argument("train: band means length mismatch");
  }

  const SpectralCube centered = center(cube, means);
  const int total = centered.pixels();
  const int n_val = std::max<int>(
      1, static_cast<int>(std::llround(config.validation_fraction * total)));
  if (total - n_val < 2) {
    throw std::invalid_argument("train: not enough pixels for a validation split");
  }

  std::vector<int> order(total);
  std::iota(order.begin(), order.end(), 0);
  Rng split_rng(mix_seed(config.seed, 1));
  split_rng.shuffle(order);
  const std::vector<int> val_indices(order.begin(), order.begin() + n_val);
  std::vector<int> train_indices(order.begin() + n_val, order.end());

  EncoderModel model;
  int first_epoch = 1;
  if (start) {
    model = *start;
    if (model.cfg.bands != cube.bands || model.cfg.k != k) {
      throw std::invalid_argument("train: checkpoint does not match cube/k");
    }
    first_epoch = model.epoch + 1;
    if (first_epoch > config.max_epochs) {
      throw std::invalid_argument(
          "train: checkpoint already at or past max_epochs");
    }
  } else {
    EncoderConfig ecfg;
    ecfg.bands = cube.bands;
    ecfg.k = k;
    if (!config.hidden.empty()) ecfg.hidden = config.hidden;
    ecfg.variant = config.variant;
    model = init_encoder(mix_seed(config.seed, 2), ecfg);
    model.seed = config.seed;
  }

  AdamState opt;
  Rng shuffle_rng(mix_seed(config.seed, 3));
  const std::vector<double>& coords = centered.band_coords;
  const int bands = centered.bands;

  TrainResult result;
  result.best_val_loss = std::numeric_limits<double>::infinity();
  EncoderModel best_model = model;
  int epochs_since_improvement = 0;
  const int stop_after = std::max(config.patience, 1);

  Matrix batch;
  for (int epoch = first_epoch; epoch <= config.max_epochs; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    shuffle_rng.shuffle(train_indices);

    double train_loss_sum = 0.0;
    std::size_t trained = 0;
    for (std::size_t at = 0; at < train_indices.size();
         at += static_cast<std::size_t>(config.batch_size)) {
      const std::size_t n = std::min<std::size_t>(config.batch_size,
                                                  train_indices.size() - at);
      if (n < 2) break;  // batch statistics need >= 2 pixels
      gather_batch(centered, train_indices, at, n, &batch);
      const int B = batch.rows;

      ForwardCache cache;
      const Matrix params = forward(model, batch, Mode::kTrain, &cache);

      Matrix spectra(B, bands);
      kernels::render_batch(params.data.data(), B, k, coords.data(), bands,
                            spectra.data.data());

      std::vector<double> losses(B);
      Matrix dspectra(B, bands);
      kernels::huber_batch(spectra.data.data(), batch.data.data(), B, bands,
                           config.huber_delta, losses.data(),
                           dspectra.data.data());

      double batch_loss = 0.0;
      for (const double l : losses) batch_loss += l;
      batch_loss /= B;
      if (!std::isfinite(batch_loss) || batch_loss > 1e6) {
        throw TrainingError("training diverged at epoch " +
                            std::to_string(epoch) + ": batch loss " +
                            std::to_string(batch_loss));
      }
      train_loss_sum += batch_loss * B;
      trained += n;

      const double inv_b = 1.0 / B;
      for (double& v : dspectra.data) v *= inv_b;

      Matrix dparams(B, 4 * k);
      kernels::render_backward_batch(params.data.data(), B, k, coords.data(),
                                     bands, dspectra.data.data(),
                                     dparams.data.data());
      const EncoderGradients grads = backward(model, cache, dparams);
      adamw_step(model, grads, opt, config);
    }

    const double train_loss =
        trained > 0 ? train_loss_sum / static_cast<double>(trained) : 0.0;
    const double val_loss =
        validation_loss(model, centered, val_indices, coords, config);
    if (!std::isfinite(val_loss)) {
      throw TrainingError("training diverged: non-finite validation loss");
    }
    const double seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
            .count();
    result.log.push_back({epoch, train_loss, val_loss, seconds});

    if (val_loss < result.best_val_loss) {
      result.best_val_loss = val_loss;
      result.best_epoch = epoch;
      best_model = model;
      best_model.epoch = epoch;
      epochs_since_improvement = 0;
    } else {
      epochs_since_improvement += 1;
      if (epochs_since_improvement >= stop_after) break;
    }
  }

  result.model = std::move(best_model);
  return result;
}

}  // namespace

TrainResult train_autoencoder(const SpectralCube& cube, const BandMeans& means,
                              const TrainConfig& config, int k) {
  return train_impl(cube, means, config, k, nullptr);
}

TrainResult train_fixed_variant(const SpectralCube& cube,
                                const BandMeans& means,
                                const TrainConfig& config, int k) {
  TrainConfig fixed = config;
  fixed.variant = Variant::kFixed;
  return train_impl(cube, means, fixed, k, nullptr);
}

TrainResult resume_training(const EncoderModel& start,
                            const SpectralCube& cube, const BandMeans& means,
                            const TrainConfig& config) {
  TrainConfig cfg = config;
  cfg.variant = start.cfg.variant;
  return train_impl(cube, means, cfg, start.cfg.k, &start);
}

void write_train_log_csv(const std::vector<EpochRecord>& log,
                         const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << "epoch,train_loss,val_loss,seconds\n";
  for (const EpochRecord& r : log) {
    out << r.epoch << ',' << csv::format_double(r.train_loss) << ','
        << csv::format_double(r.val_loss) << ','
        << csv::format_double(r.seconds) << '\n';
  }
}

}  // namespace pism
