#include "pism/kernels.hpp"

#include <vector>

#include "kernels_detail.hpp"

namespace pism::kernels::serial {

namespace kd = detail;

void dense_forward(const double* x, int batch, int in, const double* w,
                   const double* bias, int out, double* y) {
  for (int b = 0; b < batch; ++b) {
    kd::dense_forward_row(x + static_cast<std::size_t>(b) * in, in, w, bias,
                          out, y + static_cast<std::size_t>(b) * out);
  }
}

void dense_backward_input(const double* dy, int batch, int out,
                          const double* w, int in, double* dx) {
  for (int b = 0; b < batch; ++b) {
    kd::dense_backward_input_row(dy + static_cast<std::size_t>(b) * out, out,
                                 w, in, dx + static_cast<std::size_t>(b) * in);
  }
}

void dense_backward_params(const double* x, const double* dy, int batch,
                           int in, int out, double* dw, double* db) {
  for (int i = 0; i < in; ++i) {
    kd::dense_backward_weight_row(x, dy, batch, in, out, i,
                                  dw + static_cast<std::size_t>(i) * out);
  }
  for (int o = 0; o < out; ++o) {
    db[o] = kd::column_sum(dy, batch, out, o);
  }
}

void batch_mean_var(const double* z, int batch, int width, double* mean,
                    double* var) {
  for (int j = 0; j < width; ++j) {
    kd::mean_var_channel(z, batch, width, j, &mean[j], &var[j]);
  }
}

void bn_forward(const double* z, int batch, int width, const double* mean,
                const double* invstd, const double* gamma, const double* beta,
                double* y) {
  for (int b = 0; b < batch; ++b) {
    kd::bn_forward_row(z + static_cast<std::size_t>(b) * width, width, mean,
                       invstd, gamma, beta,
                       y + static_cast<std::size_t>(b) * width);
  }
}

void bn_backward(const double* z, const double* dy, int batch, int width,
                 const double* mean, const double* invstd, const double* gamma,
                 double* dz, double* dgamma, double* dbeta) {
  std::vector<double> dvar(width), dmean(width);
  for (int j = 0; j < width; ++j) {
    double s1, s2, s3;
    kd::bn_backward_sums(z, dy, batch, width, j, mean[j], &s1, &s2, &s3);
    dgamma[j] = s2 * invstd[j];
    dbeta[j] = s1;
    const double iv = invstd[j];
    dvar[j] = gamma[j] * s2 * -0.5 * iv * iv * iv;
    dmean[j] = -iv * gamma[j] * s1 + dvar[j] * (-2.0 / batch) * s3;
  }
  for (int b = 0; b < batch; ++b) {
    const std::size_t off = static_cast<std::size_t>(b) * width;
    kd::bn_backward_row(z + off, dy + off, width, mean, invstd, gamma,
                        dvar.data(), dmean.data(), batch, dz + off);
  }
}

void leaky_relu_forward(const double* y, std::size_t n, double slope,
                        double* a) {
  for (std::size_t i = 0; i < n; ++i) a[i] = kd::leaky(y[i], slope);
}

void leaky_relu_backward(const double* y, const double* da, std::size_t n,
                         double slope, double* dy) {
  for (std::size_t i = 0; i < n; ++i) dy[i] = da[i] * kd::leaky_grad(y[i], slope);
}

void head_forward(const double* z, int batch, int k, double channels,
                  double sigma_floor, double* params) {
  for (int b = 0; b < batch; ++b) {
    kd::head_forward_row(z + static_cast<std::size_t>(b) * 4 * k, k, channels,
                         sigma_floor, params + static_cast<std::size_t>(b) * 4 * k);
  }
}

void head_backward(const double* z, const double* dparams, int batch, int k,
                   double channels, double sigma_floor, double* dz) {
  for (int b = 0; b < batch; ++b) {
    kd::head_backward_row(z + static_cast<std::size_t>(b) * 4 * k,
                          dparams + static_cast<std::size_t>(b) * 4 * k, k,
                          channels, sigma_floor,
                          dz + static_cast<std::size_t>(b) * 4 * k);
  }
}

void render_batch(const double* params, int batch, int k, const double* coords,
                  int bands, double* spectra) {
  for (int b = 0; b < batch; ++b) {
    kd::render_row(params + static_cast<std::size_t>(b) * 4 * k, k, coords,
                   bands, spectra + static_cast<std::size_t>(b) * bands);
  }
}

void render_backward_batch(const double* params, int batch, int k,
                           const double* coords, int bands,
                           const double* dspectra, double* dparams) {
  for (int b = 0; b < batch; ++b) {
    kd::render_backward_row(params + static_cast<std::size_t>(b) * 4 * k, k,
                            coords, bands,
                            dspectra + static_cast<std::size_t>(b) * bands,
                            dparams + static_cast<std::size_t>(b) * 4 * k);
  }
}

void huber_batch(const double* pred, const double* target, int batch,
                 int bands, double delta, double* loss, double* dpred) {
  for (int b = 0; b < batch; ++b) {
    const std::size_t off = static_cast<std::size_t>(b) * bands;
    kd::huber_row(pred + off, target + off, bands, delta, &loss[b],
                  dpred + off);
  }
}

}  // namespace pism::kernels::serial
