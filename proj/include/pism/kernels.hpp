#pragma once

#include <cstddef>

// Hot data-parallel kernels. Each kernel exists twice with identical
// arithmetic order: pism::kernels::* runs the outer loop under OpenMP,
// pism::kernels::serial::* is the plain-loop reference. Parallelism is only
// ever over independent output elements (batch rows, output units,
// channels), and every scalar accumulation runs in a fixed order, so the two
// variants agree bitwise for any thread count. Tests assert that, and
// bench/ compares their throughput.
//
// Layout conventions: all matrices row-major. Dense weights are in x out
// (y = x @ w + b). Latent rows are [mu_0..mu_{k-1} | sigma.. | alpha.. | s..].

namespace pism::kernels {

void dense_forward(const double* x, int batch, int in, const double* w,
                   const double* bias, int out, double* y);
// dx[b,i] = sum_o dy[b,o] * w[i,o]
void dense_backward_input(const double* dy, int batch, int out,
                          const double* w, int in, double* dx);
// dw[i,o] = sum_b x[b,i] * dy[b,o];  db[o] = sum_b dy[b,o]
void dense_backward_params(const double* x, const double* dy, int batch,
                           int in, int out, double* dw, double* db);

// biased per-channel batch statistics
void batch_mean_var(const double* z, int batch, int width, double* mean,
                    double* var);
void bn_forward(const double* z, int batch, int width, const double* mean,
                const double* invstd, const double* gamma, const double* beta,
                double* y);
void bn_backward(const double* z, const double* dy, int batch, int width,
                 const double* mean, const double* invstd, const double* gamma,
                 double* dz, double* dgamma, double* dbeta);

void leaky_relu_forward(const double* y, std::size_t n, double slope,
                        double* a);
void leaky_relu_backward(const double* y, const double* da, std::size_t n,
                         double slope, double* dy);

// Head activations mapping raw logits to component parameters:
//   mu    = C * sigmoid(z)
//   sigma = sigma_floor + (C - sigma_floor) * sigmoid(z)
//   alpha = C * tanh(z)
//   s     = C * tanh(z)
void head_forward(const double* z, int batch, int k, double channels,
                  double sigma_floor, double* params);
void head_backward(const double* z, const double* dparams, int batch, int k,
                   double channels, double sigma_floor, double* dz);

// spectra[b,c] = sum_i s_i * f(coords[c] | mu_i, sigma_i, alpha_i)
void render_batch(const double* params, int batch, int k, const double* coords,
                  int bands, double* spectra);
void render_backward_batch(const double* params, int batch, int k,
                           const double* coords, int bands,
                           const double* dspectra, double* dparams);

// Per-pixel Huber loss averaged over bands and its gradient w.r.t. pred.
void huber_batch(const double* pred, const double* target, int batch,
                 int bands, double delta, double* loss, double* dpred);

namespace serial {

void dense_forward(const double* x, int batch, int in, const double* w,
                   const double* bias, int out, double* y);
void dense_backward_input(const double* dy, int batch, int out,
                          const double* w, int in, double* dx);
void dense_backward_params(const double* x, const double* dy, int batch,
                           int in, int out, double* dw, double* db);
void batch_mean_var(const double* z, int batch, int width, double* mean,
                    double* var);
void bn_forward(const double* z, int batch, int width, const double* mean,
                const double* invstd, const double* gamma, const double* beta,
                double* y);
void bn_backward(const double* z, const double* dy, int batch, int width,
                 const double* mean, const double* invstd, const double* gamma,
                 double* dz, double* dgamma, double* dbeta);
void leaky_relu_forward(const double* y, std::size_t n, double slope,
                        double* a);
void leaky_relu_backward(const double* y, const double* da, std::size_t n,
                         double slope, double* dy);
void head_forward(const double* z, int batch, int k, double channels,
                  double sigma_floor, double* params);
void head_backward(const double* z, const double* dparams, int batch, int k,
                   double channels, double sigma_floor, double* dz);
void render_batch(const double* params, int batch, int k, const double* coords,
                  int bands, double* spectra);
void render_backward_batch(const double* params, int batch, int k,
                           const double* coords, int bands,
                           const double* dspectra, double* dparams);
void huber_batch(const double* pred, const double* target, int batch,
                 int bands, double delta, double* loss, double* dpred);

}  // namespace serial

}  // namespace pism::kernels
