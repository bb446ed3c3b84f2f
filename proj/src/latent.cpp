#include "pism/latent.hpp"

#include <cmath>
#include <fstream>
#include <map>
#include <stdexcept>

#include "pism/csv.hpp"

namespace pism {

FeatureMatrix extract_latents(EncoderModel& model, const SpectralCube& cube,
                              const BandMeans& means,
                              const std::vector<std::pair<int, int>>& pixels) {
  model.validate();
  if (model.cfg.bands != cube.bands) {
    throw std::invalid_argument("extract_latents: band count mismatch");
  }
  if (means.means.size() != static_cast<std::size_t>(cube.bands)) {
    throw std::invalid_argument("extract_latents: band means mismatch");
  }
  for (const auto& [r, c] : pixels) {
    if (r < 0 || r >= cube.height || c < 0 || c >= cube.width) {
      throw std::out_of_range("extract_latents: pixel (" + std::to_string(r) +
                              "," + std::to_string(c) + ") out of bounds");
    }
  }

  const int n = static_cast<int>(pixels.size());
  const int bands = cube.bands;
  const int np = cube.pixels();
  FeatureMatrix out;
  out.pixel_rc = pixels;
  out.features = Matrix(n, 4 * model.cfg.k);

  constexpr int kChunk = 1024;
  Matrix batch;
  for (int at = 0; at < n; at += kChunk) {
    const int m = std::min(kChunk, n - at);
    batch = Matrix(m, bands);
    for (int r = 0; r < m; ++r) {
      const auto [pr, pc] = pixels[at + r];
      const int p = pr * cube.width + pc;
      double* row = batch.row(r);
      for (int c = 0; c < bands; ++c) {
        // same float rounding as the centered training inputs
        row[c] = static_cast<float>(
            static_cast<double>(
                cube.values[static_cast<std::size_t>(c) * np + p]) -
            means.means[c]);
      }
    }
    const Matrix params = forward(model, batch, Mode::kEval);
    for (int r = 0; r < m; ++r) {
      double* dst = out.features.row(at + r);
      const double* src = params.row(r);
      for (int j = 0; j < params.cols; ++j) dst[j] = src[j];
    }
  }
  return out;
}

FeatureMatrix average_per_patch(const FeatureMatrix& features,
                                const PatchSet& patches) {
  if (features.per_patch()) {
    throw std::invalid_argument("average_per_patch: input already per patch");
  }
  if (features.pixel_rc.size() !=
      static_cast<std::size_t>(features.features.rows)) {
    throw std::invalid_argument("average_per_patch: missing pixel provenance");
  }
  if (patches.width < 1) {
    throw std::invalid_argument("average_per_patch: patch set has no width");
  }

  std::map<std::pair<int, int>, int> row_of;
  for (std::size_t r = 0; r < features.pixel_rc.size(); ++r) {
    if (!row_of.emplace(features.pixel_rc[r], static_cast<int>(r)).second) {
      throw std::invalid_argument("average_per_patch: duplicate pixel row");
    }
  }

  const int d = features.features.cols;
  FeatureMatrix out;
  out.patch_ids = patches.patch_ids;
  out.features = Matrix(static_cast<int>(patches.patch_ids.size()), d);

  std::vector<bool> used(features.pixel_rc.size(), false);
  for (std::size_t pi = 0; pi < patches.patch_ids.size(); ++pi) {
    const std::vector<int>& members = patches.members[pi];
    if (members.empty()) {
      throw std::invalid_argument("average_per_patch: empty patch " +
                                  std::to_string(patches.patch_ids[pi]));
    }
    double* dst = out.features.row(static_cast<int>(pi));
    for (int j = 0; j < d; ++j) dst[j] = 0.0;
    for (const int pixel : members) {
      const std::pair<int, int> rc{pixel / patches.width,
                                   pixel % patches.width};
      const auto it = row_of.find(rc);
      if (it == row_of.end()) {
        throw std::invalid_argument(
            "average_per_patch: patch " +
            std::to_string(patches.patch_ids[pi]) +
            " references a pixel with no feature row");
      }
      used[it->second] = true;
      const double* src = features.features.row(it->second);
      for (int j = 0; j < d; ++j) dst[j] += src[j];
    }
    const double inv = 1.0 / static_cast<double>(members.size());
    for (int j = 0; j < d; ++j) dst[j] *= inv;
  }
  for (std::size_t r = 0; r < used.size(); ++r) {
    if (!used[r]) {
      throw std::invalid_argument(
          "average_per_patch: feature row not assigned to any patch");
    }
  }
  return out;
}

void write_latents_csv(const FeatureMatrix& features,
                       const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  const int d = features.features.cols;
  if (features.per_patch()) {
    out << "patch_id";
  } else {
    out << "row,col";
  }
  for (int j = 0; j < d; ++j) out << ",f_" << j;
  out << '\n';
  for (int r = 0; r < features.features.rows; ++r) {
    if (features.per_patch()) {
      out << features.patch_ids[r];
    } else {
      out << features.pixel_rc[r].first << ',' << features.pixel_rc[r].second;
    }
    const double* row = features.features.row(r);
    for (int j = 0; j < d; ++j) out << ',' << csv::format_double(row[j]);
    out << '\n';
  }
}

FeatureMatrix read_latents_csv(const std::filesystem::path& path) {
  const auto rows = csv::read(path);
  if (rows.empty()) throw std::runtime_error("latent CSV: empty file");
  const auto& header = rows[0];
  FeatureMatrix out;
  std::size_t id_cols;
  if (header.size() >= 2 && header[0] == "patch_id" && header[1] == "f_0") {
    id_cols = 1;
  } else if (header.size() >= 3 && header[0] == "row" && header[1] == "col") {
    id_cols = 2;
  } else {
    throw std::runtime_error("latent CSV: unrecognized header");
  }
  const int d = static_cast<int>(header.size() - id_cols);
  out.features = Matrix(static_cast<int>(rows.size()) - 1, d);
  for (std::size_t r = 1; r < rows.size(); ++r) {
    if (rows[r].size() != header.size()) {
      throw std::runtime_error("latent CSV: ragged row");
    }
    if (id_cols == 1) {
      out.patch_ids.push_back(static_cast<int>(csv::parse_int(rows[r][0])));
    } else {
      out.pixel_rc.emplace_back(static_cast<int>(csv::parse_int(rows[r][0])),
                                static_cast<int>(csv::parse_int(rows[r][1])));
    }
    double* dst = out.features.row(static_cast<int>(r - 1));
    for (int j = 0; j < d; ++j) {
      dst[j] = csv::parse_double(rows[r][id_cols + j]);
      if (!std::isfinite(dst[j])) {
        throw std::runtime_error("latent CSV: non-finite feature");
      }
    }
  }
  return out;
}

}  // namespace pism
