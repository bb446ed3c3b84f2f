#include <doctest.h>

#include <cmath>
#include <functional>
#include <sstream>
#include <vector>

#include "pism/renderer.hpp"
#include "pism/rng.hpp"
#include "pism/skew_normal.hpp"

namespace {

pism::ComponentParams random_params(pism::Rng& rng, int k, double c) {
  pism::ComponentParams p;
  for (int i = 0; i < k; ++i) {
    p.mu.push_back(rng.uniform(0.1 * c, 0.9 * c));
    p.sigma.push_back(rng.uniform(0.02 * c, 0.2 * c));
    p.alpha.push_back(rng.uniform(-4.0, 4.0));
    p.scale.push_back(rng.uniform(-1.0, 1.0));
  }
  return p;
}

std::vector<double> index_coords(int bands) {
  std::vector<double> c(bands);
  for (int i = 0; i < bands; ++i) c[i] = i;
  return c;
}

// composite Simpson over [lo, hi]
double simpson(double lo, double hi, int intervals,
               const std::function<double(double)>& f) {
  const double h = (hi - lo) / intervals;
  double acc = f(lo) + f(hi);
  for (int i = 1; i < intervals; ++i) {
    acc += f(lo + i * h) * (i % 2 == 1 ? 4.0 : 2.0);
  }
  return acc * h / 3.0;
}

}  // namespace

TEST_CASE("skew_normal_pdf spot values") {
  // alpha = 0 collapses to the normal PDF: 1/sqrt(2 pi)
  CHECK(pism::skew_normal_pdf(0, 0, 1, 0) ==
        doctest::Approx(0.39894228040143268).epsilon(1e-14));
  // at lambda = mu the CDF factor is exactly 1/2
  for (const double sigma : {0.3, 1.0, 7.5}) {
    for (const double alpha : {-3.0, 0.0, 5.0}) {
      CHECK(pism::skew_normal_pdf(2.0, 2.0, sigma, alpha) ==
            doctest::Approx(1.0 / (sigma * std::sqrt(2.0 * M_PI)))
                .epsilon(1e-14));
    }
  }
  // 2 * phi(1) * Phi(2), frozen from a 50-digit evaluation
  CHECK(pism::skew_normal_pdf(1, 0, 1, 2) ==
        doctest::Approx(0.47293171721747263).epsilon(1e-13));
  CHECK_THROWS_AS(pism::skew_normal_pdf(0, 0, 0.0, 1),
                  std::invalid_argument);
  CHECK_THROWS_AS(pism::skew_normal_pdf(0, 0, -1.0, 1),
                  std::invalid_argument);
}

TEST_CASE("alpha = 0 equals the normal pdf bitwise") {
  pism::Rng rng(11);
  for (int i = 0; i < 1000; ++i) {
    const double mu = rng.uniform(-20, 20);
    const double sigma = rng.uniform(0.1, 10);
    const double lambda = mu + sigma * rng.uniform(-8, 8);
    CHECK(pism::skew_normal_pdf(lambda, mu, sigma, 0.0) ==
          pism::normal_pdf(lambda, mu, sigma));
  }
}

TEST_CASE("reflection identity f(mu+d|alpha) == f(mu-d|-alpha)") {
  pism::Rng rng(12);
  double worst = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const double mu = rng.uniform(-10, 10);
    const double sigma = rng.uniform(0.1, 5);
    const double alpha = rng.uniform(-8, 8);
    const double d = sigma * rng.uniform(0, 6);
    const double lhs = pism::skew_normal_pdf(mu + d, mu, sigma, alpha);
    const double rhs = pism::skew_normal_pdf(mu - d, mu, sigma, -alpha);
    worst = std::max(worst, std::fabs(lhs - rhs));
  }
  CHECK(worst <= 1e-12);
}

TEST_CASE("quadrature normalization within 1e-6 for |alpha| <= 8") {
  for (const double alpha : {-8.0, -3.0, -0.5, 0.0, 0.5, 2.0, 8.0}) {
    for (const double sigma : {0.25, 1.0, 4.0}) {
      const double mu = 1.7;
      const double integral =
          simpson(mu - 12 * sigma, mu + 12 * sigma, 16384, [&](double x) {
            return pism::skew_normal_pdf(x, mu, sigma, alpha);
          });
      CHECK(integral == doctest::Approx(1.0).epsilon(1e-6));
    }
  }
}

TEST_CASE("render basics") {
  const auto coords = index_coords(16);
  pism::Rng rng(13);

  // zero scales give the zero spectrum
  pism::ComponentParams zero = random_params(rng, 3, 16);
  zero.scale.assign(3, 0.0);
  for (const double v : pism::render(zero, coords)) CHECK(v == 0.0);

  // a single unit-scale component samples the pdf
  pism::ComponentParams one;
  one.mu = {6.0};
  one.sigma = {2.0};
  one.alpha = {1.5};
  one.scale = {1.0};
  const auto spectrum = pism::render(one, coords);
  for (int c = 0; c < 16; ++c) {
    CHECK(spectrum[c] ==
          doctest::Approx(pism::skew_normal_pdf(coords[c], 6.0, 2.0, 1.5))
              .epsilon(1e-15));
  }
}

TEST_CASE("render matches a brute-force scalar loop within 1e-12") {
  const auto coords = index_coords(24);
  pism::Rng rng(14);
  for (int rep = 0; rep < 20; ++rep) {
    const auto params = random_params(rng, 3, 24);
    const auto spectrum = pism::render(params, coords);
    for (std::size_t c = 0; c < coords.size(); ++c) {
      double expected = 0.0;
      for (int i = 0; i < 3; ++i) {
        expected += params.scale[i] *
                    2.0 * pism::normal_pdf(coords[c], params.mu[i],
                                           params.sigma[i]) *
                    pism::norm_cdf(params.alpha[i] * (coords[c] - params.mu[i]));
      }
      CHECK(spectrum[c] == doctest::Approx(expected).epsilon(1e-12));
    }
  }
}

TEST_CASE("render is linear in the scales") {
  const auto coords = index_coords(20);
  pism::Rng rng(15);
  pism::ComponentParams base = random_params(rng, 4, 20);
  pism::ComponentParams u = base, v = base, combo = base;
  for (int i = 0; i < 4; ++i) {
    u.scale[i] = rng.uniform(-1, 1);
    v.scale[i] = rng.uniform(-1, 1);
    combo.scale[i] = 2.5 * u.scale[i] - 0.75 * v.scale[i];
  }
  const auto su = pism::render(u, coords);
  const auto sv = pism::render(v, coords);
  const auto sc = pism::render(combo, coords);
  for (std::size_t c = 0; c < coords.size(); ++c) {
    CHECK(sc[c] ==
          doctest::Approx(2.5 * su[c] - 0.75 * sv[c]).epsilon(1e-10));
  }
}

TEST_CASE("analytic render gradient matches central differences") {
  const auto coords = index_coords(12);
  pism::Rng rng(16);
  int checked = 0;
  for (int rep = 0; rep < 100; ++rep) {
    const auto params = random_params(rng, 2, 12);
    pism::Matrix grad;
    const auto spectrum = pism::render_with_gradient(params, coords, &grad);

    const auto rendered = pism::render(params, coords);
    for (std::size_t c = 0; c < coords.size(); ++c) {
      CHECK(spectrum[c] == rendered[c]);
    }

    std::vector<double> flat(4 * 2);
    params.to_flat(flat.data());
    for (int j = 0; j < 8; ++j) {
      const double h = 1e-4 * std::max(1.0, std::fabs(flat[j]));
      std::vector<double> plus = flat, minus = flat;
      plus[j] += h;
      minus[j] -= h;
      const auto sp = pism::render(pism::ComponentParams::from_flat(plus.data(), 2), coords);
      const auto sm = pism::render(pism::ComponentParams::from_flat(minus.data(), 2), coords);
      for (std::size_t c = 0; c < coords.size(); ++c) {
        const double fd = (sp[c] - sm[c]) / (2 * h);
        const double an = grad.at(static_cast<int>(c), j);
        const double tol = 1e-8 + 1e-4 * std::max(std::fabs(fd), std::fabs(an));
        CHECK(std::fabs(fd - an) <= tol);
        ++checked;
      }
    }
  }
  CHECK(checked > 100 * 8 * 10);
}

TEST_CASE("dS/ds_i equals the component pdf exactly") {
  const auto coords = index_coords(10);
  pism::Rng rng(17);
  const auto params = random_params(rng, 3, 10);
  pism::Matrix grad;
  pism::render_with_gradient(params, coords, &grad);
  for (std::size_t c = 0; c < coords.size(); ++c) {
    for (int i = 0; i < 3; ++i) {
      CHECK(grad.at(static_cast<int>(c), 9 + i) ==
            pism::skew_normal_pdf(coords[c], params.mu[i], params.sigma[i],
                                  params.alpha[i]));
    }
  }
}

TEST_CASE("dS/dalpha vanishes at lambda = mu when alpha = 0") {
  pism::ComponentParams p;
  p.mu = {5.0};
  p.sigma = {1.25};
  p.alpha = {0.0};
  p.scale = {0.8};
  pism::Matrix grad;
  pism::render_with_gradient(p, {5.0}, &grad);
  CHECK(grad.at(0, 2) == 0.0);
}

TEST_CASE("render_components sums back to render") {
  const auto coords = index_coords(32);
  pism::Rng rng(18);
  const auto params = random_params(rng, 5, 32);
  const auto curves = pism::render_components(params, coords);
  REQUIRE(curves.size() == 5);
  const auto total = pism::render(params, coords);
  for (std::size_t c = 0; c < coords.size(); ++c) {
    double sum = 0.0;
    for (const auto& curve : curves) sum += curve[c];
    CHECK(sum == doctest::Approx(total[c]).epsilon(1e-12));
  }

  // single component curve is the render output itself
  pism::ComponentParams single;
  single.mu = {10.0};
  single.sigma = {3.0};
  single.alpha = {-2.0};
  single.scale = {0.5};
  const auto curve = pism::render_components(single, coords);
  const auto rendered = pism::render(single, coords);
  for (std::size_t c = 0; c < coords.size(); ++c) {
    CHECK(curve[0][c] == rendered[c]);
  }

  // negative scale keeps the whole curve non-positive
  single.scale = {-0.7};
  for (const double v : pism::render_components(single, coords)[0]) {
    CHECK(v <= 0.0);
  }
}

TEST_CASE("components CSV has one row per pixel, component and band") {
  const auto coords = index_coords(8);
  pism::Rng rng(19);
  std::vector<std::tuple<int, int, pism::ComponentParams>> pixels;
  pixels.emplace_back(0, 0, random_params(rng, 2, 8));
  pixels.emplace_back(3, 1, random_params(rng, 2, 8));
  std::ostringstream os;
  pism::write_components_csv(os, pixels, coords);
  int lines = 0;
  std::string line;
  std::istringstream is(os.str());
  std::getline(is, line);
  CHECK(line == "pixel_row,pixel_col,component_index,band_coord,value");
  while (std::getline(is, line)) ++lines;
  CHECK(lines == 2 * 2 * 8);
}
