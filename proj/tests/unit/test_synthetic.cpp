#include <doctest.h>

#include <cmath>
#include <set>

#include "pism/synthetic.hpp"

TEST_CASE("synthetic generation is deterministic and range-respecting") {
  const auto [cube_a, truth_a] = pism::generate_synthetic(7, 200, 16, 3, 0.0);
  const auto [cube_b, truth_b] = pism::generate_synthetic(7, 200, 16, 3, 0.0);
  CHECK(cube_a.values == cube_b.values);
  REQUIRE(truth_a.params.size() == 200);
  for (std::size_t p = 0; p < truth_a.params.size(); ++p) {
    for (int i = 0; i < 3; ++i) {
      CHECK(truth_a.params[p].mu[i] == truth_b.params[p].mu[i]);
      CHECK(truth_a.params[p].mu[i] >= 0.1 * 16);
      CHECK(truth_a.params[p].mu[i] <= 0.9 * 16);
      CHECK(truth_a.params[p].sigma[i] >= 0.02 * 16);
      CHECK(truth_a.params[p].sigma[i] <= 0.2 * 16);
      CHECK(std::fabs(truth_a.params[p].alpha[i]) <= 4.0);
      CHECK(std::fabs(truth_a.params[p].scale[i]) <= 1.0);
    }
  }

  const auto [cube_c, truth_c] = pism::generate_synthetic(8, 200, 16, 3, 0.0);
  CHECK(cube_a.values != cube_c.values);
}

TEST_CASE("noiseless spectra equal the rendered truth exactly") {
  const auto [cube, truth] = pism::generate_synthetic(3, 50, 12, 2, 0.0);
  for (int p = 0; p < cube.pixels(); ++p) {
    const auto spectrum = pism::render(truth.params[p], cube.band_coords);
    for (int c = 0; c < cube.bands; ++c) {
      CHECK(cube.at(c, p) == static_cast<float>(spectrum[c]));
    }
  }
}

TEST_CASE("noise residual sd is within 10% of the requested sd") {
  const double noise_sd = 0.01;
  const auto [cube, truth] = pism::generate_synthetic(9, 1000, 16, 3, noise_sd);
  double sumsq = 0.0;
  std::size_t n = 0;
  for (int p = 0; p < cube.pixels(); ++p) {
    const auto clean = pism::render(truth.params[p], cube.band_coords);
    for (int c = 0; c < cube.bands; ++c) {
      const double r = cube.at(c, p) - clean[c];
      sumsq += r * r;
      ++n;
    }
  }
  const double sd = std::sqrt(sumsq / n);
  CHECK(sd == doctest::Approx(noise_sd).epsilon(0.10));
}

TEST_CASE("invalid arguments are rejected") {
  CHECK_THROWS_AS(pism::generate_synthetic(1, 0, 16, 3, 0.0),
                  std::invalid_argument);
  CHECK_THROWS_AS(pism::generate_synthetic(1, 10, 4, 3, 0.0),
                  std::invalid_argument);
  CHECK_THROWS_AS(pism::generate_synthetic(1, 10, 16, 0, 0.0),
                  std::invalid_argument);
}

TEST_CASE("shared-shape cubes share mu/sigma/alpha across pixels") {
  pism::SyntheticOptions opt;
  opt.shared_shape = true;
  const auto d = pism::generate_synthetic_ex(4, 100, 16, 3, 0.0, opt);
  const auto& first = d.truth.params[0];
  bool scales_differ = false;
  for (const auto& p : d.truth.params) {
    CHECK(p.mu == first.mu);
    CHECK(p.sigma == first.sigma);
    CHECK(p.alpha == first.alpha);
    scales_differ = scales_differ || p.scale != first.scale;
  }
  CHECK(scales_differ);
}

TEST_CASE("class-structured cubes label every pixel") {
  pism::SyntheticOptions opt;
  opt.classes = 3;
  const auto d = pism::generate_synthetic_ex(5, 300, 16, 2, 0.0, opt);
  std::set<int> seen;
  for (const int c : d.labels.classes) {
    CHECK(c >= 0);
    CHECK(c < 3);
    seen.insert(c);
  }
  CHECK(seen.size() == 3);
  CHECK(d.labels.n_classes() == 3);
}
