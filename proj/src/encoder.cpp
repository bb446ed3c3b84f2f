#include "pism/encoder.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

#include "pism/kernels.hpp"
#include "pism/rng.hpp"

namespace pism {

namespace {

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

void check_dims(const EncoderConfig& cfg) {
  if (cfg.bands < 1 || cfg.k < 1) {
    throw std::invalid_argument("encoder: bands and k must be >= 1");
  }
  if (cfg.hidden.empty()) {
    throw std::invalid_argument("encoder: at least one hidden layer required");
  }
  for (const int w : cfg.hidden) {
    if (w < 1) throw std::invalid_argument("encoder: non-positive layer width");
  }
}

}  // namespace

std::size_t EncoderModel::parameter_count() const {
  std::size_t n = 0;
  for (const DenseLayer& l : layers) n += l.w.size() + l.b.size();
  for (const BatchNormLayer& b : bn) n += b.gamma.size() + b.beta.size();
  n += bank.size();
  return n;
}

void EncoderModel::validate() const {
  check_dims(cfg);
  if (layers.size() != cfg.hidden.size() + 1 || bn.size() != cfg.hidden.size()) {
    throw std::runtime_error("encoder: layer count mismatch");
  }
  if (layers.front().w.rows != cfg.bands) {
    throw std::runtime_error("encoder: first layer width != band count");
  }
  if (layers.back().w.cols != cfg.latent_width()) {
    throw std::runtime_error("encoder: final layer width mismatch");
  }
  for (const BatchNormLayer& b : bn) {
    for (const double v : b.running_var) {
      if (!(v > 0.0)) throw std::runtime_error("encoder: running variance <= 0");
    }
  }
  if (cfg.variant == Variant::kFixed &&
      bank.size() != static_cast<std::size_t>(3 * cfg.k)) {
    throw std::runtime_error("encoder: bank size != 3k");
  }
}

EncoderModel init_encoder(std::uint64_t seed, const EncoderConfig& cfg_in) {
  EncoderConfig cfg = cfg_in;
  check_dims(cfg);
  if (cfg.sigma_floor <= 0.0) cfg.sigma_floor = 0.01 * cfg.bands;

  EncoderModel m;
  m.cfg = cfg;
  m.seed = seed;

  Rng rng(mix_seed(seed, 0xE14C));
  int fan_in = cfg.bands;
  std::vector<int> widths = cfg.hidden;
  widths.push_back(cfg.latent_width());
  for (const int out : widths) {
    DenseLayer layer;
    layer.w = Matrix(fan_in, out);
    const double bound = std::sqrt(6.0 / fan_in);
    for (double& v : layer.w.data) v = rng.uniform(-bound, bound);
    layer.b.assign(out, 0.0);
    m.layers.push_back(std::move(layer));
    fan_in = out;
  }
  for (const int width : cfg.hidden) {
    BatchNormLayer b;
    b.gamma.assign(width, 1.0);
    b.beta.assign(width, 0.0);
    b.running_mean.assign(width, 0.0);
    b.running_var.assign(width, 1.0);
    m.bn.push_back(std::move(b));
  }
  if (cfg.variant == Variant::kFixed) {
    m.bank.resize(3 * static_cast<std::size_t>(cfg.k));
    for (double& v : m.bank) v = rng.uniform(-2.0, 2.0);
  }
  return m;
}

EncoderModel init_encoder(std::uint64_t seed, int bands, int k) {
  EncoderConfig cfg;
  cfg.bands = bands;
  cfg.k = k;
  return init_encoder(seed, cfg);
}

void bank_activate(const EncoderModel& model, std::vector<double>* mu,
                   std::vector<double>* sigma, std::vector<double>* alpha) {
  const int k = model.cfg.k;
  const double c = model.cfg.bands;
  const double sf = model.cfg.sigma_floor;
  mu->resize(k);
  sigma->resize(k);
  alpha->resize(k);
  for (int i = 0; i < k; ++i) {
    (*mu)[i] = c * sigmoid(model.bank[i]);
    (*sigma)[i] = sf + (c - sf) * sigmoid(model.bank[k + i]);
    (*alpha)[i] = c * std::tanh(model.bank[2 * k + i]);
  }
}

Matrix forward(EncoderModel& model, const Matrix& batch, Mode mode,
               ForwardCache* cache, bool update_running) {
  model.validate();
  if (batch.cols != model.cfg.bands) {
    throw std::invalid_argument("forward: batch width != band count");
  }
  if (mode == Mode::kTrain && batch.rows < 2) {
    throw std::invalid_argument(
        "forward: train mode needs a batch of >= 2 pixels");
  }

  ForwardCache local;
  ForwardCache& cc = cache ? *cache : local;
  const int n_hidden = static_cast<int>(model.cfg.hidden.size());
  cc.mode = mode;
  cc.batch = batch.rows;
  cc.input = batch;
  cc.z.assign(n_hidden, {});
  cc.y.assign(n_hidden, {});
  cc.a.assign(n_hidden, {});
  cc.mean.assign(n_hidden, {});
  cc.invstd.assign(n_hidden, {});

  const int B = batch.rows;
  const Matrix* prev = &cc.input;
  for (int l = 0; l < n_hidden; ++l) {
    const DenseLayer& layer = model.layers[l];
    BatchNormLayer& bnl = model.bn[l];
    const int width = layer.w.cols;

    cc.z[l] = Matrix(B, width);
    kernels::dense_forward(prev->data.data(), B, layer.w.rows,
                           layer.w.data.data(), layer.b.data(), width,
                           cc.z[l].data.data());

    cc.mean[l].resize(width);
    cc.invstd[l].resize(width);
    if (mode == Mode::kTrain) {
      std::vector<double> var(width);
      kernels::batch_mean_var(cc.z[l].data.data(), B, width,
                              cc.mean[l].data(), var.data());
      for (int j = 0; j < width; ++j) {
        cc.invstd[l][j] = 1.0 / std::sqrt(var[j] + model.cfg.bn_eps);
      }
      if (update_running) {
        const double mom = model.cfg.bn_momentum;
        for (int j = 0; j < width; ++j) {
          bnl.running_mean[j] =
              (1.0 - mom) * bnl.running_mean[j] + mom * cc.mean[l][j];
          bnl.running_var[j] =
              (1.0 - mom) * bnl.running_var[j] + mom * var[j];
        }
      }
    } else {
      for (int j = 0; j < width; ++j) {
        cc.mean[l][j] = bnl.running_mean[j];
        cc.invstd[l][j] = 1.0 / std::sqrt(bnl.running_var[j] + model.cfg.bn_eps);
      }
    }

    cc.y[l] = Matrix(B, width);
    kernels::bn_forward(cc.z[l].data.data(), B, width, cc.mean[l].data(),
                        cc.invstd[l].data(), bnl.gamma.data(), bnl.beta.data(),
                        cc.y[l].data.data());

    cc.a[l] = Matrix(B, width);
    kernels::leaky_relu_forward(cc.y[l].data.data(), cc.y[l].size(),
                                model.cfg.leaky_slope, cc.a[l].data.data());
    prev = &cc.a[l];
  }

  const DenseLayer& head_layer = model.layers[n_hidden];
  const int latent = head_layer.w.cols;
  cc.z_final = Matrix(B, latent);
  kernels::dense_forward(prev->data.data(), B, head_layer.w.rows,
                         head_layer.w.data.data(), head_layer.b.data(), latent,
                         cc.z_final.data.data());

  const int k = model.cfg.k;
  cc.params = Matrix(B, 4 * k);
  if (model.cfg.variant == Variant::kFull) {
    kernels::head_forward(cc.z_final.data.data(), B, k, model.cfg.bands,
                          model.cfg.sigma_floor, cc.params.data.data());
  } else {
    std::vector<double> mu, sg, al;
    bank_activate(model, &mu, &sg, &al);
    const double c = model.cfg.bands;
    for (int b = 0; b < B; ++b) {
      double* prow = cc.params.row(b);
      const double* zrow = cc.z_final.row(b);
      for (int i = 0; i < k; ++i) {
        prow[i] = mu[i];
        prow[k + i] = sg[i];
        prow[2 * k + i] = al[i];
        prow[3 * k + i] = c * std::tanh(zrow[i]);
      }
    }
  }
  return cc.params;
}

EncoderGradients backward(const EncoderModel& model, const ForwardCache& cache,
                          const Matrix& dparams) {
  if (cache.mode != Mode::kTrain || cache.batch == 0) {
    throw std::logic_error("backward: requires the cache of a train-mode forward");
  }
  const int k = model.cfg.k;
  if (dparams.rows != cache.batch || dparams.cols != 4 * k) {
    throw std::invalid_argument("backward: upstream gradient shape mismatch");
  }

  const int n_hidden = static_cast<int>(model.cfg.hidden.size());
  const int B = cache.batch;
  EncoderGradients g;
  g.dw.resize(n_hidden + 1);
  g.db.resize(n_hidden + 1);
  g.dgamma.resize(n_hidden);
  g.dbeta.resize(n_hidden);

  // heads
  const int latent = model.cfg.latent_width();
  Matrix dz_final(B, latent);
  if (model.cfg.variant == Variant::kFull) {
    kernels::head_backward(cache.z_final.data.data(), dparams.data.data(), B,
                           k, model.cfg.bands, model.cfg.sigma_floor,
                           dz_final.data.data());
  } else {
    const double c = model.cfg.bands;
    const double sf = model.cfg.sigma_floor;
    for (int b = 0; b < B; ++b) {
      const double* zrow = cache.z_final.row(b);
      const double* dprow = dparams.row(b);
      double* dzrow = dz_final.row(b);
      for (int i = 0; i < k; ++i) {
        const double t = std::tanh(zrow[i]);
        dzrow[i] = dprow[3 * k + i] * c * (1.0 - t * t);
      }
    }
    // shared shapes: one gradient per bank logit, summed over the batch in
    // fixed order
    g.dbank.assign(3 * static_cast<std::size_t>(k), 0.0);
    for (int i = 0; i < k; ++i) {
      double sum_mu = 0.0, sum_sg = 0.0, sum_al = 0.0;
      for (int b = 0; b < B; ++b) {
        const double* dprow = dparams.row(b);
        sum_mu += dprow[i];
        sum_sg += dprow[k + i];
        sum_al += dprow[2 * k + i];
      }
      const double sm = sigmoid(model.bank[i]);
      const double ss = sigmoid(model.bank[k + i]);
      const double ta = std::tanh(model.bank[2 * k + i]);
      g.dbank[i] = sum_mu * c * sm * (1.0 - sm);
      g.dbank[k + i] = sum_sg * (c - sf) * ss * (1.0 - ss);
      g.dbank[2 * k + i] = sum_al * c * (1.0 - ta * ta);
    }
  }

  // final dense layer
  const Matrix& head_input = n_hidden > 0 ? cache.a[n_hidden - 1] : cache.input;
  const DenseLayer& head_layer = model.layers[n_hidden];
  g.dw[n_hidden] = Matrix(head_layer.w.rows, head_layer.w.cols);
  g.db[n_hidden].assign(latent, 0.0);
  kernels::dense_backward_params(head_input.data.data(), dz_final.data.data(),
                                 B, head_layer.w.rows, latent,
                                 g.dw[n_hidden].data.data(),
                                 g.db[n_hidden].data());
  Matrix da(B, head_layer.w.rows);
  kernels::dense_backward_input(dz_final.data.data(), B, latent,
                                head_layer.w.data.data(), head_layer.w.rows,
                                da.data.data());

  // hidden layers
  for (int l = n_hidden - 1; l >= 0; --l) {
    const DenseLayer& layer = model.layers[l];
    const int width = layer.w.cols;

    Matrix dy(B, width);
    kernels::leaky_relu_backward(cache.y[l].data.data(), da.data.data(),
                                 dy.size(), model.cfg.leaky_slope,
                                 dy.data.data());

    Matrix dz(B, width);
    g.dgamma[l].assign(width, 0.0);
    g.dbeta[l].assign(width, 0.0);
    kernels::bn_backward(cache.z[l].data.data(), dy.data.data(), B, width,
                         cache.mean[l].data(), cache.invstd[l].data(),
                         model.bn[l].gamma.data(), dz.data.data(),
                         g.dgamma[l].data(), g.dbeta[l].data());

    const Matrix& layer_input = l > 0 ? cache.a[l - 1] : cache.input;
    g.dw[l] = Matrix(layer.w.rows, layer.w.cols);
    g.db[l].assign(width, 0.0);
    kernels::dense_backward_params(layer_input.data.data(), dz.data.data(), B,
                                   layer.w.rows, width, g.dw[l].data.data(),
                                   g.db[l].data());
    if (l > 0) {
      da = Matrix(B, layer.w.rows);
      kernels::dense_backward_input(dz.data.data(), B, width,
                                    layer.w.data.data(), layer.w.rows,
                                    da.data.data());
    }
  }
  return g;
}

// ---------------------------------------------------------------------------
// checkpoint io

namespace {

void write_tensor_f32(const std::filesystem::path& path,
                      const double* data, std::size_t n) {
  std::vector<float> buf(n);
  for (std::size_t i = 0; i < n; ++i) buf[i] = static_cast<float>(data[i]);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write tensor: " + path.string());
  out.write(reinterpret_cast<const char*>(buf.data()),
            static_cast<std::streamsize>(n * sizeof(float)));
  if (!out) throw std::runtime_error("short write: " + path.string());
}

void read_tensor_f32(const std::filesystem::path& path, double* data,
                     std::size_t n) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("tensor file missing: " + path.string());
  in.seekg(0, std::ios::end);
  if (static_cast<std::size_t>(in.tellg()) != n * sizeof(float)) {
    throw std::runtime_error("tensor size mismatch: " + path.string());
  }
  in.seekg(0);
  std::vector<float> buf(n);
  in.read(reinterpret_cast<char*>(buf.data()),
          static_cast<std::streamsize>(n * sizeof(float)));
  if (!in) throw std::runtime_error("short read: " + path.string());
  for (std::size_t i = 0; i < n; ++i) data[i] = buf[i];
}

struct TensorRef {
  std::string name;
  std::vector<int> shape;
  const double* data;
  double* mutable_data;
  std::size_t count;
};

std::vector<TensorRef> tensor_table(EncoderModel& m) {
  std::vector<TensorRef> t;
  for (std::size_t l = 0; l < m.layers.size(); ++l) {
    const std::string p = "layer" + std::to_string(l);
    t.push_back({p + ".weight", {m.layers[l].w.rows, m.layers[l].w.cols},
                 m.layers[l].w.data.data(), m.layers[l].w.data.data(),
                 m.layers[l].w.size()});
    t.push_back({p + ".bias", {static_cast<int>(m.layers[l].b.size())},
                 m.layers[l].b.data(), m.layers[l].b.data(),
                 m.layers[l].b.size()});
  }
  for (std::size_t l = 0; l < m.bn.size(); ++l) {
    const std::string p = "bn" + std::to_string(l);
    BatchNormLayer& b = m.bn[l];
    const int w = static_cast<int>(b.gamma.size());
    t.push_back({p + ".gamma", {w}, b.gamma.data(), b.gamma.data(), b.gamma.size()});
    t.push_back({p + ".beta", {w}, b.beta.data(), b.beta.data(), b.beta.size()});
    t.push_back({p + ".running_mean", {w}, b.running_mean.data(),
                 b.running_mean.data(), b.running_mean.size()});
    t.push_back({p + ".running_var", {w}, b.running_var.data(),
                 b.running_var.data(), b.running_var.size()});
  }
  if (!m.bank.empty()) {
    t.push_back({"bank", {static_cast<int>(m.bank.size())}, m.bank.data(),
                 m.bank.data(), m.bank.size()});
  }
  return t;
}

}  // namespace

void save_checkpoint(const EncoderModel& model,
                     const std::filesystem::path& manifest_path) {
  model.validate();
  const auto dir = manifest_path.parent_path();
  if (!dir.empty()) std::filesystem::create_directories(dir);

  auto& mutable_model = const_cast<EncoderModel&>(model);  // read-only use
  const auto tensors = tensor_table(mutable_model);

  nlohmann::ordered_json j;
  j["format"] = "pism-checkpoint-v1";
  j["variant"] = model.cfg.variant == Variant::kFull ? "full" : "fixed";
  j["bands"] = model.cfg.bands;
  j["k"] = model.cfg.k;
  j["hidden_widths"] = model.cfg.hidden;
  j["sigma_floor"] = model.cfg.sigma_floor;
  j["leaky_slope"] = model.cfg.leaky_slope;
  j["bn_eps"] = model.cfg.bn_eps;
  j["bn_momentum"] = model.cfg.bn_momentum;
  j["seed"] = model.seed;
  j["epoch"] = model.epoch;
  nlohmann::ordered_json tlist = nlohmann::ordered_json::array();
  for (const TensorRef& t : tensors) {
    nlohmann::ordered_json tj;
    tj["name"] = t.name;
    tj["shape"] = t.shape;
    tj["file"] = t.name + ".f32";
    tlist.push_back(tj);
    write_tensor_f32(dir / (t.name + ".f32"), t.data, t.count);
  }
  j["tensors"] = tlist;

  std::ofstream out(manifest_path);
  if (!out) {
    throw std::runtime_error("cannot write manifest: " + manifest_path.string());
  }
  out << j.dump(1) << '\n';
}

EncoderModel load_checkpoint(const std::filesystem::path& manifest_path) {
  std::ifstream in(manifest_path);
  if (!in) {
    throw std::runtime_error("manifest not found: " + manifest_path.string());
  }
  nlohmann::json j;
  in >> j;
  if (j.at("format").get<std::string>() != "pism-checkpoint-v1") {
    throw std::runtime_error("unknown checkpoint format");
  }

  EncoderConfig cfg;
  cfg.bands = j.at("bands").get<int>();
  cfg.k = j.at("k").get<int>();
  cfg.hidden = j.at("hidden_widths").get<std::vector<int>>();
  cfg.sigma_floor = j.at("sigma_floor").get<double>();
  cfg.leaky_slope = j.at("leaky_slope").get<double>();
  cfg.bn_eps = j.at("bn_eps").get<double>();
  cfg.bn_momentum = j.at("bn_momentum").get<double>();
  cfg.variant = j.at("variant").get<std::string>() == "fixed" ? Variant::kFixed
                                                              : Variant::kFull;

  EncoderModel m = init_encoder(0, cfg);
  m.seed = j.at("seed").get<std::uint64_t>();
  m.epoch = j.at("epoch").get<int>();

  const auto dir = manifest_path.parent_path();
  auto tensors = tensor_table(m);
  const auto& tlist = j.at("tensors");
  if (tlist.size() != tensors.size()) {
    throw std::runtime_error("checkpoint: tensor count mismatch");
  }
  for (std::size_t i = 0; i < tensors.size(); ++i) {
    const auto& tj = tlist[i];
    if (tj.at("name").get<std::string>() != tensors[i].name) {
      throw std::runtime_error("checkpoint: unexpected tensor name " +
                               tj.at("name").get<std::string>());
    }
    if (tj.at("shape").get<std::vector<int>>() != tensors[i].shape) {
      throw std::runtime_error("checkpoint: tensor shape mismatch for " +
                               tensors[i].name);
    }
    read_tensor_f32(dir / tj.at("file").get<std::string>(),
                    tensors[i].mutable_data, tensors[i].count);
  }
  m.validate();
  return m;
}

}  // namespace pism
