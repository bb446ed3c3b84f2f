#include "pism/synthetic.hpp"

#include <algorithm>
#include <fstream>
#include <stdexcept>

#include "pism/csv.hpp"
#include "pism/rng.hpp"

namespace pism {

namespace {

ComponentParams draw_params(Rng& rng, int k, double c) {
  ComponentParams p;
  p.mu.resize(k);
  p.sigma.resize(k);
  p.alpha.resize(k);
  p.scale.resize(k);
  for (int i = 0; i < k; ++i) {
    p.mu[i] = rng.uniform(0.1 * c, 0.9 * c);
    p.sigma[i] = rng.uniform(0.02 * c, 0.2 * c);
    p.alpha[i] = rng.uniform(-4.0, 4.0);
    p.scale[i] = rng.uniform(-1.0, 1.0);
  }
  return p;
}

// Class prototypes keep their sigma/alpha; mu and scale get a small
// per-pixel jitter so pixels of one class form a tight cluster. Prototype
// scales are drawn away from zero so every component is visible.
ComponentParams draw_prototype(Rng& rng, int k, double c) {
  ComponentParams p = draw_params(rng, k, c);
  for (int i = 0; i < k; ++i) {
    const double sign = p.scale[i] < 0.0 ? -1.0 : 1.0;
    p.scale[i] = sign * rng.uniform(0.4, 1.0);
  }
  return p;
}

ComponentParams jitter(Rng& rng, const ComponentParams& proto, double c) {
  ComponentParams p = proto;
  for (int i = 0; i < p.count(); ++i) {
    p.mu[i] = std::clamp(p.mu[i] + 0.02 * c * rng.uniform(-1.0, 1.0), 0.05 * c,
                         0.95 * c);
    p.scale[i] += 0.05 * rng.uniform(-1.0, 1.0);
  }
  return p;
}

}  // namespace

SyntheticDataset generate_synthetic_ex(std::uint64_t seed, int pixels,
                                       int bands, int k, double noise_sd,
                                       const SyntheticOptions& options) {
  if (pixels < 1 || k < 1) {
    throw std::invalid_argument("generate_synthetic: pixels and k must be >= 1");
  }
  if (bands < 8) {
    throw std::invalid_argument("generate_synthetic: bands must be >= 8");
  }
  if (noise_sd < 0.0 || options.classes < 0) {
    throw std::invalid_argument("generate_synthetic: invalid arguments");
  }

  const double c = bands;
  std::vector<double> coords(bands);
  for (int i = 0; i < bands; ++i) coords[i] = i;

  SyntheticDataset out;
  out.cube.height = 1;
  out.cube.width = pixels;
  out.cube.bands = bands;
  out.cube.band_coords = coords;
  out.cube.values.resize(static_cast<std::size_t>(pixels) * bands);
  out.truth.noise_sd = noise_sd;
  out.truth.params.reserve(pixels);
  out.labels.height = 1;
  out.labels.width = pixels;
  out.labels.classes.assign(pixels, kUnlabeledClass);

  Rng rng(mix_seed(seed, 0x5D47));

  std::vector<ComponentParams> prototypes;
  ComponentParams shared;
  if (options.classes > 0) {
    prototypes.reserve(options.classes);
    for (int i = 0; i < options.classes; ++i) {
      prototypes.push_back(draw_prototype(rng, k, c));
    }
  } else if (options.shared_shape) {
    shared = draw_params(rng, k, c);
  }

  for (int p = 0; p < pixels; ++p) {
    ComponentParams params;
    if (options.classes > 0) {
      const int cls = static_cast<int>(rng.below(options.classes));
      out.labels.classes[p] = cls;
      params = jitter(rng, prototypes[cls], c);
    } else if (options.shared_shape) {
      params = shared;
      for (int i = 0; i < k; ++i) params.scale[i] = rng.uniform(-1.0, 1.0);
    } else {
      params = draw_params(rng, k, c);
    }

    const std::vector<double> spectrum = render(params, coords);
    for (int b = 0; b < bands; ++b) {
      double v = spectrum[b];
      if (noise_sd > 0.0) v += noise_sd * rng.normal();
      out.cube.values[static_cast<std::size_t>(b) * pixels + p] =
          static_cast<float>(v);
    }
    out.truth.params.push_back(std::move(params));
  }

  out.cube.validate();
  return out;
}

std::pair<SpectralCube, SyntheticTruth> generate_synthetic(std::uint64_t seed,
                                                           int pixels,
                                                           int bands, int k,
                                                           double noise_sd) {
  SyntheticDataset d =
      generate_synthetic_ex(seed, pixels, bands, k, noise_sd, {});
  return {std::move(d.cube), std::move(d.truth)};
}

void write_truth_csv(const SyntheticTruth& truth,
                     const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << "pixel,component,mu,sigma,alpha,s\n";
  for (std::size_t p = 0; p < truth.params.size(); ++p) {
    const ComponentParams& cp = truth.params[p];
    for (int i = 0; i < cp.count(); ++i) {
      out << p << ',' << i << ',' << csv::format_double(cp.mu[i]) << ','
          << csv::format_double(cp.sigma[i]) << ','
          << csv::format_double(cp.alpha[i]) << ','
          << csv::format_double(cp.scale[i]) << '\n';
    }
  }
}

}  // namespace pism
