#pragma once

#include <filesystem>
#include <vector>

namespace pism {

// Hyperspectral cube. On disk: `<name>.json` header (height, width, bands,
// dtype "f32le", interleave "bsq", band_coords) next to a `<name>.f32`
// payload of little-endian binary32 values, band-sequential (all of band 0,
// then band 1, ...). Immutable after load; safe to read concurrently.
struct SpectralCube {
  int height = 0;
  int width = 0;
  int bands = 0;
  std::vector<float> values;        // [band][row*width + col]
  std::vector<double> band_coords;  // strictly increasing, length == bands

  int pixels() const { return height * width; }
  float at(int band, int pixel) const {
    return values[static_cast<std::size_t>(band) * pixels() + pixel];
  }
  // gather one pixel's spectrum into out[0..bands)
  void spectrum(int pixel, double* out) const;
  void validate() const;  // throws on any invariant violation
};

struct BandMeans {
  std::vector<double> means;
};

SpectralCube load_cube(const std::filesystem::path& header_path);
void write_cube(const SpectralCube& cube,
                const std::filesystem::path& header_path);

// means[c] = mean over mask-selected pixels of band c (double accumulation,
// fixed pixel order)
BandMeans compute_band_means(const SpectralCube& cube,
                             const std::vector<bool>& train_mask);
BandMeans compute_band_means(const SpectralCube& cube);  // all pixels

// out[p,c] = in[p,c] - means[c], stored back to float
SpectralCube center(const SpectralCube& cube, const BandMeans& means);

void write_band_means_csv(const BandMeans& means,
                          const std::filesystem::path& path);
BandMeans load_band_means_csv(const std::filesystem::path& path);

}  // namespace pism
