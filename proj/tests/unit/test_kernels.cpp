#include <doctest.h>

#include <cmath>
#include <vector>

#include "pism/kernels.hpp"
#include "pism/rng.hpp"

// The OpenMP kernels only parallelize over independent outputs, so they must
// agree bitwise with the serial reference for any thread count.

namespace {

namespace kk = pism::kernels;

std::vector<double> random_vec(std::size_t n, pism::Rng& rng, double lo = -1,
                               double hi = 1) {
  std::vector<double> v(n);
  for (double& x : v) x = rng.uniform(lo, hi);
  return v;
}

bool bitwise_equal(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i] != b[i]) return false;
  }
  return true;
}

}  // namespace

TEST_CASE("dense kernels: omp == serial bitwise") {
  pism::Rng rng(21);
  for (const auto [batch, in, out] :
       {std::tuple{7, 5, 9}, std::tuple{64, 33, 17}, std::tuple{128, 64, 96}}) {
    const auto x = random_vec(static_cast<std::size_t>(batch) * in, rng);
    const auto w = random_vec(static_cast<std::size_t>(in) * out, rng);
    const auto bias = random_vec(out, rng);
    std::vector<double> y1(static_cast<std::size_t>(batch) * out);
    std::vector<double> y2 = y1;
    kk::dense_forward(x.data(), batch, in, w.data(), bias.data(), out, y1.data());
    kk::serial::dense_forward(x.data(), batch, in, w.data(), bias.data(), out,
                              y2.data());
    CHECK(bitwise_equal(y1, y2));

    const auto dy = random_vec(static_cast<std::size_t>(batch) * out, rng);
    std::vector<double> dx1(static_cast<std::size_t>(batch) * in), dx2 = dx1;
    kk::dense_backward_input(dy.data(), batch, out, w.data(), in, dx1.data());
    kk::serial::dense_backward_input(dy.data(), batch, out, w.data(), in,
                                     dx2.data());
    CHECK(bitwise_equal(dx1, dx2));

    std::vector<double> dw1(static_cast<std::size_t>(in) * out), dw2 = dw1;
    std::vector<double> db1(out), db2(out);
    kk::dense_backward_params(x.data(), dy.data(), batch, in, out, dw1.data(),
                              db1.data());
    kk::serial::dense_backward_params(x.data(), dy.data(), batch, in, out,
                                      dw2.data(), db2.data());
    CHECK(bitwise_equal(dw1, dw2));
    CHECK(bitwise_equal(db1, db2));
  }
}

TEST_CASE("dense_forward computes x @ w + b") {
  // 2x2 hand case: y = x w + b
  const std::vector<double> x{1, 2, 3, 4};      // 2x2
  const std::vector<double> w{10, 20, 30, 40};  // 2x2, in x out
  const std::vector<double> b{0.5, -0.5};
  std::vector<double> y(4);
  kk::serial::dense_forward(x.data(), 2, 2, w.data(), b.data(), 2, y.data());
  CHECK(y[0] == doctest::Approx(1 * 10 + 2 * 30 + 0.5));
  CHECK(y[1] == doctest::Approx(1 * 20 + 2 * 40 - 0.5));
  CHECK(y[2] == doctest::Approx(3 * 10 + 4 * 30 + 0.5));
  CHECK(y[3] == doctest::Approx(3 * 20 + 4 * 40 - 0.5));
}

TEST_CASE("bn kernels: omp == serial bitwise, stats correct") {
  pism::Rng rng(22);
  const int batch = 97, width = 23;
  const auto z = random_vec(static_cast<std::size_t>(batch) * width, rng, -3, 5);
  std::vector<double> m1(width), m2(width), v1(width), v2(width);
  kk::batch_mean_var(z.data(), batch, width, m1.data(), v1.data());
  kk::serial::batch_mean_var(z.data(), batch, width, m2.data(), v2.data());
  CHECK(bitwise_equal(m1, m2));
  CHECK(bitwise_equal(v1, v2));

  // against a direct two-pass reference on one channel
  double mean0 = 0.0;
  for (int b = 0; b < batch; ++b) mean0 += z[static_cast<std::size_t>(b) * width];
  mean0 /= batch;
  CHECK(m1[0] == doctest::Approx(mean0).epsilon(1e-12));

  std::vector<double> invstd(width), gamma(width, 1.2), beta(width, -0.3);
  for (int j = 0; j < width; ++j) invstd[j] = 1.0 / std::sqrt(v1[j] + 1e-5);
  std::vector<double> y1(z.size()), y2(z.size());
  kk::bn_forward(z.data(), batch, width, m1.data(), invstd.data(), gamma.data(),
                 beta.data(), y1.data());
  kk::serial::bn_forward(z.data(), batch, width, m1.data(), invstd.data(),
                         gamma.data(), beta.data(), y2.data());
  CHECK(bitwise_equal(y1, y2));

  const auto dy = random_vec(z.size(), rng);
  std::vector<double> dz1(z.size()), dz2(z.size());
  std::vector<double> dg1(width), dg2(width), db1(width), db2(width);
  kk::bn_backward(z.data(), dy.data(), batch, width, m1.data(), invstd.data(),
                  gamma.data(), dz1.data(), dg1.data(), db1.data());
  kk::serial::bn_backward(z.data(), dy.data(), batch, width, m1.data(),
                          invstd.data(), gamma.data(), dz2.data(), dg2.data(),
                          db2.data());
  CHECK(bitwise_equal(dz1, dz2));
  CHECK(bitwise_equal(dg1, dg2));
  CHECK(bitwise_equal(db1, db2));
}

TEST_CASE("head and render kernels: omp == serial bitwise") {
  pism::Rng rng(23);
  const int batch = 41, k = 3, bands = 19;
  const auto z = random_vec(static_cast<std::size_t>(batch) * 4 * k, rng, -2, 2);
  std::vector<double> p1(z.size()), p2(z.size());
  kk::head_forward(z.data(), batch, k, bands, 0.19, p1.data());
  kk::serial::head_forward(z.data(), batch, k, bands, 0.19, p2.data());
  CHECK(bitwise_equal(p1, p2));

  const auto dp = random_vec(z.size(), rng);
  std::vector<double> dz1(z.size()), dz2(z.size());
  kk::head_backward(z.data(), dp.data(), batch, k, bands, 0.19, dz1.data());
  kk::serial::head_backward(z.data(), dp.data(), batch, k, bands, 0.19,
                            dz2.data());
  CHECK(bitwise_equal(dz1, dz2));

  std::vector<double> coords(bands);
  for (int c = 0; c < bands; ++c) coords[c] = c;
  std::vector<double> s1(static_cast<std::size_t>(batch) * bands), s2 = s1;
  kk::render_batch(p1.data(), batch, k, coords.data(), bands, s1.data());
  kk::serial::render_batch(p1.data(), batch, k, coords.data(), bands, s2.data());
  CHECK(bitwise_equal(s1, s2));

  const auto ds = random_vec(s1.size(), rng);
  std::vector<double> dp1(z.size()), dp2(z.size());
  kk::render_backward_batch(p1.data(), batch, k, coords.data(), bands,
                            ds.data(), dp1.data());
  kk::serial::render_backward_batch(p1.data(), batch, k, coords.data(), bands,
                                    ds.data(), dp2.data());
  CHECK(bitwise_equal(dp1, dp2));

  std::vector<double> loss1(batch), loss2(batch);
  std::vector<double> g1(s1.size()), g2(s1.size());
  kk::huber_batch(s1.data(), ds.data(), batch, bands, 1.0, loss1.data(),
                  g1.data());
  kk::serial::huber_batch(s1.data(), ds.data(), batch, bands, 1.0,
                          loss2.data(), g2.data());
  CHECK(bitwise_equal(loss1, loss2));
  CHECK(bitwise_equal(g1, g2));
}

TEST_CASE("leaky relu kernels") {
  pism::Rng rng(24);
  const auto y = random_vec(1001, rng, -2, 2);
  std::vector<double> a1(y.size()), a2(y.size());
  kk::leaky_relu_forward(y.data(), y.size(), 0.01, a1.data());
  kk::serial::leaky_relu_forward(y.data(), y.size(), 0.01, a2.data());
  CHECK(bitwise_equal(a1, a2));
  for (std::size_t i = 0; i < y.size(); ++i) {
    CHECK(a1[i] == (y[i] > 0 ? y[i] : 0.01 * y[i]));
  }

  const auto da = random_vec(y.size(), rng);
  std::vector<double> dy1(y.size()), dy2(y.size());
  kk::leaky_relu_backward(y.data(), da.data(), y.size(), 0.01, dy1.data());
  kk::serial::leaky_relu_backward(y.data(), da.data(), y.size(), 0.01,
                                  dy2.data());
  CHECK(bitwise_equal(dy1, dy2));
}
