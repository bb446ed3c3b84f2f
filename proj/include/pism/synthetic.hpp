#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "pism/cube.hpp"
#include "pism/labels.hpp"
#include "pism/renderer.hpp"

namespace pism {

// Ground truth recorded while generating a synthetic cube; the test oracle
// for recoverability experiments.
struct SyntheticTruth {
  std::vector<ComponentParams> params;  // one entry per pixel
  double noise_sd = 0.0;
};

struct SyntheticOptions {
  // Draw a single (mu, sigma, alpha) set shared by all pixels; only the
  // scales vary per pixel. Matches the modeling assumption of the fixed
  // component-bank variant.
  bool shared_shape = false;
  // When > 0, pixels are grouped into this many classes, each with its own
  // component prototype; per-pixel parameters are jittered copies of the
  // prototype and labels are recorded.
  int classes = 0;
};

struct SyntheticDataset {
  SpectralCube cube;
  SyntheticTruth truth;
  LabelMap labels;  // all pixels -1 when options.classes == 0
};

// Each pixel's spectrum is a k-component skew-normal mixture sampled at band
// coordinates 0..bands-1 plus i.i.d. Gaussian noise of sd noise_sd.
// Parameter ranges (C = bands):
//   mu ~ U[0.1 C, 0.9 C], sigma ~ U[0.02 C, 0.2 C],
//   alpha ~ U[-4, 4],     s ~ U[-1, 1]
// Deterministic function of the seed. Cube layout 1 x pixels.
std::pair<SpectralCube, SyntheticTruth> generate_synthetic(std::uint64_t seed,
                                                           int pixels,
                                                           int bands, int k,
                                                           double noise_sd);

SyntheticDataset generate_synthetic_ex(std::uint64_t seed, int pixels,
                                       int bands, int k, double noise_sd,
                                       const SyntheticOptions& options);

void write_truth_csv(const SyntheticTruth& truth,
                     const std::filesystem::path& path);

}  // namespace pism
