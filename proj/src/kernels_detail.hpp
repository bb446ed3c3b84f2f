#pragma once

#include <cmath>
#include <cstddef>

#include "pism/skew_normal.hpp"

// Per-element work shared by the OpenMP and serial kernel variants. Keeping
// the arithmetic in one place is what makes the two variants bitwise equal:
// they only differ in how the outer loop is driven.

namespace pism::kernels::detail {

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

inline void dense_forward_row(const double* xrow, int in, const double* w,
                              const double* bias, int out, double* yrow) {
  for (int o = 0; o < out; ++o) yrow[o] = bias[o];
  for (int i = 0; i < in; ++i) {
    const double xi = xrow[i];
    const double* wrow = w + static_cast<std::size_t>(i) * out;
    for (int o = 0; o < out; ++o) yrow[o] += xi * wrow[o];
  }
}

inline void dense_backward_input_row(const double* dyrow, int out,
                                     const double* w, int in, double* dxrow) {
  for (int i = 0; i < in; ++i) {
    const double* wrow = w + static_cast<std::size_t>(i) * out;
    double acc = 0.0;
    for (int o = 0; o < out; ++o) acc += dyrow[o] * wrow[o];
    dxrow[i] = acc;
  }
}

// one row of dw: dw[i,:] = sum_b x[b,i] * dy[b,:]
inline void dense_backward_weight_row(const double* x, const double* dy,
                                      int batch, int in, int out, int i,
                                      double* dwrow) {
  for (int o = 0; o < out; ++o) dwrow[o] = 0.0;
  for (int b = 0; b < batch; ++b) {
    const double xbi = x[static_cast<std::size_t>(b) * in + i];
    const double* dyrow = dy + static_cast<std::size_t>(b) * out;
    for (int o = 0; o < out; ++o) dwrow[o] += xbi * dyrow[o];
  }
}

inline double column_sum(const double* m, int batch, int width, int j) {
  double acc = 0.0;
  for (int b = 0; b < batch; ++b) acc += m[static_cast<std::size_t>(b) * width + j];
  return acc;
}

inline void mean_var_channel(const double* z, int batch, int width, int j,
                             double* mean, double* var) {
  double m = 0.0;
  for (int b = 0; b < batch; ++b) m += z[static_cast<std::size_t>(b) * width + j];
  m /= batch;
  double v = 0.0;
  for (int b = 0; b < batch; ++b) {
    const double d = z[static_cast<std::size_t>(b) * width + j] - m;
    v += d * d;
  }
  *mean = m;
  *var = v / batch;
}

inline void bn_forward_row(const double* zrow, int width, const double* mean,
                           const double* invstd, const double* gamma,
                           const double* beta, double* yrow) {
  for (int j = 0; j < width; ++j) {
    yrow[j] = gamma[j] * ((zrow[j] - mean[j]) * invstd[j]) + beta[j];
  }
}

// per-channel reductions of the batch-norm backward pass:
//   s1 = sum_b dy, s2 = sum_b dy*(z-mean), s3 = sum_b (z-mean)
inline void bn_backward_sums(const double* z, const double* dy, int batch,
                             int width, int j, double mean, double* s1,
                             double* s2, double* s3) {
  double a1 = 0.0, a2 = 0.0, a3 = 0.0;
  for (int b = 0; b < batch; ++b) {
    const std::size_t idx = static_cast<std::size_t>(b) * width + j;
    const double c = z[idx] - mean;
    a1 += dy[idx];
    a2 += dy[idx] * c;
    a3 += c;
  }
  *s1 = a1;
  *s2 = a2;
  *s3 = a3;
}

inline void bn_backward_row(const double* zrow, const double* dyrow, int width,
                            const double* mean, const double* invstd,
                            const double* gamma, const double* dvar,
                            const double* dmean, int batch, double* dzrow) {
  for (int j = 0; j < width; ++j) {
    const double centered = zrow[j] - mean[j];
    dzrow[j] = gamma[j] * dyrow[j] * invstd[j] +
               dvar[j] * 2.0 * centered / batch + dmean[j] / batch;
  }
}

inline double leaky(double y, double slope) { return y > 0.0 ? y : slope * y; }
inline double leaky_grad(double y, double slope) { return y > 0.0 ? 1.0 : slope; }

inline void head_forward_row(const double* zrow, int k, double channels,
                             double sigma_floor, double* prow) {
  for (int i = 0; i < k; ++i) {
    prow[i] = channels * sigmoid(zrow[i]);
    prow[k + i] = sigma_floor + (channels - sigma_floor) * sigmoid(zrow[k + i]);
    prow[2 * k + i] = channels * std::tanh(zrow[2 * k + i]);
    prow[3 * k + i] = channels * std::tanh(zrow[3 * k + i]);
  }
}

inline void head_backward_row(const double* zrow, const double* dprow, int k,
                              double channels, double sigma_floor,
                              double* dzrow) {
  for (int i = 0; i < k; ++i) {
    const double sm = sigmoid(zrow[i]);
    dzrow[i] = dprow[i] * channels * sm * (1.0 - sm);
    const double ss = sigmoid(zrow[k + i]);
    dzrow[k + i] = dprow[k + i] * (channels - sigma_floor) * ss * (1.0 - ss);
    const double ta = std::tanh(zrow[2 * k + i]);
    dzrow[2 * k + i] = dprow[2 * k + i] * channels * (1.0 - ta * ta);
    const double ts = std::tanh(zrow[3 * k + i]);
    dzrow[3 * k + i] = dprow[3 * k + i] * channels * (1.0 - ts * ts);
  }
}

inline void render_row(const double* prow, int k, const double* coords,
                       int bands, double* srow) {
  const double* mu = prow;
  const double* sigma = prow + k;
  const double* alpha = prow + 2 * k;
  const double* scale = prow + 3 * k;
  for (int c = 0; c < bands; ++c) {
    double acc = 0.0;
    for (int i = 0; i < k; ++i) {
      acc += scale[i] * pism::detail::skew_pdf(coords[c], mu[i], sigma[i],
                                               alpha[i]);
    }
    srow[c] = acc;
  }
}

inline void render_backward_row(const double* prow, int k,
                                const double* coords, int bands,
                                const double* dsrow, double* dprow) {
  const double* mu = prow;
  const double* sigma = prow + k;
  const double* alpha = prow + 2 * k;
  const double* scale = prow + 3 * k;
  for (int j = 0; j < 4 * k; ++j) dprow[j] = 0.0;
  for (int c = 0; c < bands; ++c) {
    const double g = dsrow[c];
    for (int i = 0; i < k; ++i) {
      pism::detail::SkewPdfGrads pg;
      const double f = pism::detail::skew_pdf_grad(coords[c], mu[i], sigma[i],
                                                   alpha[i], &pg);
      dprow[i] += g * scale[i] * pg.d_mu;
      dprow[k + i] += g * scale[i] * pg.d_sigma;
      dprow[2 * k + i] += g * scale[i] * pg.d_alpha;
      dprow[3 * k + i] += g * f;
    }
  }
}

inline void huber_row(const double* pred, const double* target, int bands,
                      double delta, double* loss, double* dpred) {
  double acc = 0.0;
  for (int c = 0; c < bands; ++c) {
    const double e = pred[c] - target[c];
    const double a = std::fabs(e);
    if (a <= delta) {
      acc += 0.5 * e * e;
      dpred[c] = e / bands;
    } else {
      acc += delta * (a - 0.5 * delta);
      dpred[c] = (e > 0.0 ? delta : -delta) / bands;
    }
  }
  *loss = acc / bands;
}

}  // namespace pism::kernels::detail
