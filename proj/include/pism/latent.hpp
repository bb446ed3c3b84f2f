#pragma once

#include <filesystem>
#include <utility>
#include <vector>

#include "pism/cube.hpp"
#include "pism/encoder.hpp"
#include "pism/labels.hpp"
#include "pism/tensor.hpp"

namespace pism {

// Latent feature rows (activated component parameters) with provenance:
// pixel coordinates, or patch ids after averaging.
struct FeatureMatrix {
  Matrix features;  // N x 4k
  std::vector<std::pair<int, int>> pixel_rc;
  std::vector<int> patch_ids;

  bool per_patch() const { return !patch_ids.empty(); }
};

// Eval-mode forward on centered spectra of the requested pixels, rows in
// request order.
FeatureMatrix extract_latents(EncoderModel& model, const SpectralCube& cube,
                              const BandMeans& means,
                              const std::vector<std::pair<int, int>>& pixels);

// One row per patch id (ascending): the arithmetic mean of member rows.
// Every feature row must belong to a patch and no patch may come up empty.
FeatureMatrix average_per_patch(const FeatureMatrix& features,
                                const PatchSet& patches);

// CSV: id columns (row,col or patch_id) then f_0..f_{d-1}
void write_latents_csv(const FeatureMatrix& features,
                       const std::filesystem::path& path);
FeatureMatrix read_latents_csv(const std::filesystem::path& path);

}  // namespace pism
