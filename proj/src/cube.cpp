#include "pism/cube.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

#include "pism/csv.hpp"

static_assert(std::endian::native == std::endian::little,
              "cube payloads are little-endian; big-endian hosts unsupported");
static_assert(sizeof(float) == 4);

namespace pism {

void SpectralCube::spectrum(int pixel, double* out) const {
  const std::size_t stride = static_cast<std::size_t>(pixels());
  for (int c = 0; c < bands; ++c) {
    out[c] = values[static_cast<std::size_t>(c) * stride + pixel];
  }
}

void SpectralCube::validate() const {
  if (height <= 0 || width <= 0 || bands <= 0) {
    throw std::runtime_error("cube: non-positive dimensions");
  }
  if (values.size() != static_cast<std::size_t>(pixels()) * bands) {
    throw std::runtime_error("cube: value count does not match H*W*C");
  }
  if (band_coords.size() != static_cast<std::size_t>(bands)) {
    throw std::runtime_error("cube: band_coords length mismatch");
  }
  for (int c = 1; c < bands; ++c) {
    if (!(band_coords[c] > band_coords[c - 1])) {
      throw std::runtime_error("cube: band_coords must be strictly increasing");
    }
  }
  for (const float v : values) {
    if (!std::isfinite(v)) throw std::runtime_error("cube: non-finite value");
  }
}

namespace {

std::filesystem::path payload_path(const std::filesystem::path& header_path) {
  std::filesystem::path p = header_path;
  p.replace_extension(".f32");
  return p;
}

}  // namespace

SpectralCube load_cube(const std::filesystem::path& header_path) {
  std::ifstream hin(header_path);
  if (!hin) {
    throw std::runtime_error("cube header not found: " + header_path.string());
  }
  nlohmann::json j;
  try {
    hin >> j;
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error("cube header is not valid JSON: " +
                             std::string(e.what()));
  }

  SpectralCube cube;
  cube.height = j.at("height").get<int>();
  cube.width = j.at("width").get<int>();
  cube.bands = j.at("bands").get<int>();
  if (j.at("dtype").get<std::string>() != "f32le") {
    throw std::runtime_error("cube: unsupported dtype (expected f32le)");
  }
  if (j.at("interleave").get<std::string>() != "bsq") {
    throw std::runtime_error("cube: unsupported interleave (expected bsq)");
  }
  if (j.contains("band_coords")) {
    cube.band_coords = j.at("band_coords").get<std::vector<double>>();
  } else {
    cube.band_coords.resize(cube.bands);
    for (int c = 0; c < cube.bands; ++c) cube.band_coords[c] = c;
  }
  if (cube.height <= 0 || cube.width <= 0 || cube.bands <= 0) {
    throw std::runtime_error("cube: non-positive dimensions in header");
  }

  const auto bin = payload_path(header_path);
  std::ifstream pin(bin, std::ios::binary);
  if (!pin) throw std::runtime_error("cube payload not found: " + bin.string());
  pin.seekg(0, std::ios::end);
  const auto file_size = static_cast<std::size_t>(pin.tellg());
  const std::size_t expected =
      static_cast<std::size_t>(cube.pixels()) * cube.bands * sizeof(float);
  if (file_size != expected) {
    throw std::runtime_error("cube: payload size " + std::to_string(file_size) +
                             " does not match header (expected " +
                             std::to_string(expected) + " bytes)");
  }
  pin.seekg(0);
  cube.values.resize(static_cast<std::size_t>(cube.pixels()) * cube.bands);
  pin.read(reinterpret_cast<char*>(cube.values.data()),
           static_cast<std::streamsize>(expected));
  if (!pin) throw std::runtime_error("cube: short read on payload");

  cube.validate();
  return cube;
}

void write_cube(const SpectralCube& cube,
                const std::filesystem::path& header_path) {
  cube.validate();
  nlohmann::ordered_json j;
  j["height"] = cube.height;
  j["width"] = cube.width;
  j["bands"] = cube.bands;
  j["dtype"] = "f32le";
  j["interleave"] = "bsq";
  j["band_coords"] = cube.band_coords;
  std::ofstream hout(header_path);
  if (!hout) {
    throw std::runtime_error("cannot write cube header: " + header_path.string());
  }
  hout << j.dump(1) << '\n';

  const auto bin = payload_path(header_path);
  std::ofstream pout(bin, std::ios::binary);
  if (!pout) throw std::runtime_error("cannot write cube payload: " + bin.string());
  pout.write(reinterpret_cast<const char*>(cube.values.data()),
             static_cast<std::streamsize>(cube.values.size() * sizeof(float)));
  if (!pout) throw std::runtime_error("short write on cube payload");
}

BandMeans compute_band_means(const SpectralCube& cube,
                             const std::vector<bool>& train_mask) {
  if (train_mask.size() != static_cast<std::size_t>(cube.pixels())) {
    throw std::invalid_argument("compute_band_means: mask size mismatch");
  }
  std::size_t selected = 0;
  for (const bool m : train_mask) selected += m;
  if (selected == 0) {
    throw std::invalid_argument("compute_band_means: empty mask");
  }

  BandMeans out;
  out.means.resize(cube.bands);
  const int np = cube.pixels();
  for (int c = 0; c < cube.bands; ++c) {
    const float* band = cube.values.data() + static_cast<std::size_t>(c) * np;
    double acc = 0.0;
    for (int p = 0; p < np; ++p) {
      if (train_mask[p]) acc += band[p];
    }
    out.means[c] = acc / static_cast<double>(selected);
  }
  return out;
}

BandMeans compute_band_means(const SpectralCube& cube) {
  return compute_band_means(
      cube, std::vector<bool>(static_cast<std::size_t>(cube.pixels()), true));
}

SpectralCube center(const SpectralCube& cube, const BandMeans& means) {
  if (means.means.size() != static_cast<std::size_t>(cube.bands)) {
    throw std::invalid_argument("center: band count mismatch");
  }
  SpectralCube out = cube;
  const int np = cube.pixels();
  for (int c = 0; c < cube.bands; ++c) {
    const double m = means.means[c];
    float* band = out.values.data() + static_cast<std::size_t>(c) * np;
    for (int p = 0; p < np; ++p) {
      band[p] = static_cast<float>(static_cast<double>(band[p]) - m);
    }
  }
  return out;
}

void write_band_means_csv(const BandMeans& means,
                          const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << "band,mean\n";
  for (std::size_t c = 0; c < means.means.size(); ++c) {
    out << c << ',' << csv::format_double(means.means[c]) << '\n';
  }
}

BandMeans load_band_means_csv(const std::filesystem::path& path) {
  const auto rows = csv::read(path);
  if (rows.empty() || rows[0].size() != 2 || rows[0][0] != "band") {
    throw std::runtime_error("band means CSV: expected header band,mean");
  }
  BandMeans means;
  means.means.resize(rows.size() - 1);
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto band = static_cast<std::size_t>(csv::parse_int(rows[r][0]));
    if (band >= means.means.size()) {
      throw std::runtime_error("band means CSV: band index out of range");
    }
    means.means[band] = csv::parse_double(rows[r][1]);
  }
  return means;
}

}  // namespace pism
