// Throughput comparison of the OpenMP kernels against their serial
// reference twins on training-sized shapes. Usage: bench_kernels [reps]

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <vector>

#include <omp.h>

#include "pism/kernels.hpp"
#include "pism/rng.hpp"

namespace {

using Clock = std::chrono::steady_clock;

double time_of(const std::function<void()>& fn, int reps) {
  fn();  // warm up
  const auto t0 = Clock::now();
  for (int i = 0; i < reps; ++i) fn();
  return std::chrono::duration<double>(Clock::now() - t0).count() / reps;
}

void report(const char* name, double serial_s, double omp_s) {
  std::printf("%-24s %10.3f ms %10.3f ms %8.2fx\n", name, serial_s * 1e3,
              omp_s * 1e3, serial_s / omp_s);
}

std::vector<double> random_vec(std::size_t n, pism::Rng& rng, double lo,
                               double hi) {
  std::vector<double> v(n);
  for (double& x : v) x = rng.uniform(lo, hi);
  return v;
}

}  // namespace

int main(int argc, char** argv) {
  const int reps = argc > 1 ? std::atoi(argv[1]) : 10;
  const int batch = 1024, in = 512, out = 1024, bands = 103, k = 10;

  pism::Rng rng(42);
  const auto x = random_vec(static_cast<std::size_t>(batch) * in, rng, -1, 1);
  const auto w = random_vec(static_cast<std::size_t>(in) * out, rng, -0.1, 0.1);
  const auto bias = random_vec(out, rng, -0.1, 0.1);
  const auto dy = random_vec(static_cast<std::size_t>(batch) * out, rng, -1, 1);
  std::vector<double> y(static_cast<std::size_t>(batch) * out);
  std::vector<double> dx(static_cast<std::size_t>(batch) * in);
  std::vector<double> dw(static_cast<std::size_t>(in) * out), db(out);
  std::vector<double> mean(out), var(out);

  std::vector<double> params(static_cast<std::size_t>(batch) * 4 * k);
  for (int b = 0; b < batch; ++b) {
    double* row = params.data() + static_cast<std::size_t>(b) * 4 * k;
    for (int i = 0; i < k; ++i) {
      row[i] = rng.uniform(0.1 * bands, 0.9 * bands);
      row[k + i] = rng.uniform(0.02 * bands, 0.2 * bands);
      row[2 * k + i] = rng.uniform(-4, 4);
      row[3 * k + i] = rng.uniform(-1, 1);
    }
  }
  std::vector<double> coords(bands);
  for (int c = 0; c < bands; ++c) coords[c] = c;
  std::vector<double> spectra(static_cast<std::size_t>(batch) * bands);
  std::vector<double> dspectra =
      random_vec(static_cast<std::size_t>(batch) * bands, rng, -1, 1);
  std::vector<double> dparams(static_cast<std::size_t>(batch) * 4 * k);

  namespace kk = pism::kernels;
  std::printf("threads: %d, reps: %d\n", omp_get_max_threads(), reps);
  std::printf("%-24s %13s %13s %9s\n", "kernel", "serial", "openmp", "speedup");

  report("dense_forward",
         time_of([&] { kk::serial::dense_forward(x.data(), batch, in, w.data(),
                                                 bias.data(), out, y.data()); },
                 reps),
         time_of([&] { kk::dense_forward(x.data(), batch, in, w.data(),
                                         bias.data(), out, y.data()); },
                 reps));
  report("dense_backward_input",
         time_of([&] { kk::serial::dense_backward_input(dy.data(), batch, out,
                                                        w.data(), in, dx.data()); },
                 reps),
         time_of([&] { kk::dense_backward_input(dy.data(), batch, out, w.data(),
                                                in, dx.data()); },
                 reps));
  report("dense_backward_params",
         time_of([&] { kk::serial::dense_backward_params(x.data(), dy.data(),
                                                         batch, in, out,
                                                         dw.data(), db.data()); },
                 reps),
         time_of([&] { kk::dense_backward_params(x.data(), dy.data(), batch, in,
                                                 out, dw.data(), db.data()); },
                 reps));
  report("batch_mean_var",
         time_of([&] { kk::serial::batch_mean_var(dy.data(), batch, out,
                                                  mean.data(), var.data()); },
                 reps),
         time_of([&] { kk::batch_mean_var(dy.data(), batch, out, mean.data(),
                                          var.data()); },
                 reps));
  report("render_batch",
         time_of([&] { kk::serial::render_batch(params.data(), batch, k,
                                                coords.data(), bands,
                                                spectra.data()); },
                 reps),
         time_of([&] { kk::render_batch(params.data(), batch, k, coords.data(),
                                        bands, spectra.data()); },
                 reps));
  report("render_backward_batch",
         time_of([&] { kk::serial::render_backward_batch(
                            params.data(), batch, k, coords.data(), bands,
                            dspectra.data(), dparams.data()); },
                 reps),
         time_of([&] { kk::render_backward_batch(params.data(), batch, k,
                                                 coords.data(), bands,
                                                 dspectra.data(),
                                                 dparams.data()); },
                 reps));

  std::vector<double> loss(batch);
  std::vector<double> dpred(static_cast<std::size_t>(batch) * bands);
  report("huber_batch",
         time_of([&] { kk::serial::huber_batch(spectra.data(), dspectra.data(),
                                               batch, bands, 1.0, loss.data(),
                                               dpred.data()); },
                 reps),
         time_of([&] { kk::huber_batch(spectra.data(), dspectra.data(), batch,
                                       bands, 1.0, loss.data(), dpred.data()); },
                 reps));
  return 0;
}
