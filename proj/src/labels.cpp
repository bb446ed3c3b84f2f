#include "pism/labels.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <set>
#include <stdexcept>

#include "pism/csv.hpp"

namespace pism {

namespace {

void require_header(const std::vector<std::vector<std::string>>& rows,
                    const std::vector<std::string>& expected,
                    const std::string& what) {
  if (rows.empty() || rows[0].size() < expected.size()) {
    throw std::runtime_error(what + ": missing header row");
  }
  for (std::size_t i = 0; i < expected.size(); ++i) {
    if (rows[0][i] != expected[i]) {
      throw std::runtime_error(what + ": expected header column '" +
                               expected[i] + "', got '" + rows[0][i] + "'");
    }
  }
}

int checked_pixel(long long row, long long col, int height, int width,
                  const std::string& what) {
  if (row < 0 || row >= height || col < 0 || col >= width) {
    throw std::runtime_error(what + ": pixel (" + std::to_string(row) + "," +
                             std::to_string(col) + ") outside " +
                             std::to_string(height) + "x" +
                             std::to_string(width));
  }
  return static_cast<int>(row) * width + static_cast<int>(col);
}

}  // namespace

int LabelMap::n_classes() const {
  int m = -1;
  for (const int c : classes) m = std::max(m, c);
  return m + 1;
}

LabelMap load_labels_csv(const std::filesystem::path& path, int height,
                         int width) {
  const auto rows = csv::read(path);
  require_header(rows, {"row", "col", "class"}, "labels CSV");
  LabelMap out;
  out.height = height;
  out.width = width;
  out.classes.assign(static_cast<std::size_t>(height) * width, kUnlabeledClass);
  for (std::size_t r = 1; r < rows.size(); ++r) {
    if (rows[r].size() != 3) throw std::runtime_error("labels CSV: bad row");
    const int p = checked_pixel(csv::parse_int(rows[r][0]),
                                csv::parse_int(rows[r][1]), height, width,
                                "labels CSV");
    const long long cls = csv::parse_int(rows[r][2]);
    if (cls < kUnlabeledClass) {
      throw std::runtime_error("labels CSV: class id below -1");
    }
    out.classes[p] = static_cast<int>(cls);
  }
  return out;
}

void write_labels_csv(const LabelMap& labels,
                      const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << "row,col,class\n";
  for (int r = 0; r < labels.height; ++r) {
    for (int c = 0; c < labels.width; ++c) {
      const int cls = labels.at(r, c);
      if (cls != kUnlabeledClass) {
        out << r << ',' << c << ',' << cls << '\n';
      }
    }
  }
}

int PatchSet::index_of(int patch_id) const {
  const auto it = std::lower_bound(patch_ids.begin(), patch_ids.end(), patch_id);
  if (it == patch_ids.end() || *it != patch_id) return -1;
  return static_cast<int>(it - patch_ids.begin());
}

PatchSet load_patches_csv(const std::filesystem::path& path, int height,
                          int width) {
  const auto rows = csv::read(path);
  require_header(rows, {"patch_id", "row", "col"}, "patches CSV");
  std::map<int, std::vector<int>> by_id;
  std::set<int> seen_pixels;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    if (rows[r].size() != 3) throw std::runtime_error("patches CSV: bad row");
    const int id = static_cast<int>(csv::parse_int(rows[r][0]));
    const int p = checked_pixel(csv::parse_int(rows[r][1]),
                                csv::parse_int(rows[r][2]), height, width,
                                "patches CSV");
    if (!seen_pixels.insert(p).second) {
      throw std::runtime_error("patches CSV: pixel assigned to two patches");
    }
    by_id[id].push_back(p);
  }
  PatchSet out;
  out.width = width;
  for (auto& [id, members] : by_id) {
    out.patch_ids.push_back(id);
    out.members.push_back(std::move(members));
  }
  return out;
}

void write_patches_csv(const PatchSet& patches,
                       const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << "patch_id,row,col\n";
  for (std::size_t i = 0; i < patches.patch_ids.size(); ++i) {
    for (const int p : patches.members[i]) {
      out << patches.patch_ids[i] << ',' << p / patches.width << ','
          << p % patches.width << '\n';
    }
  }
}

int PatchTargets::index_of(int patch_id) const {
  for (std::size_t i = 0; i < patch_ids.size(); ++i) {
    if (patch_ids[i] == patch_id) return static_cast<int>(i);
  }
  return -1;
}

PatchTargets load_patch_targets_csv(const std::filesystem::path& path) {
  const auto rows = csv::read(path);
  require_header(rows, {"patch_id"}, "patch targets CSV");
  if (rows[0].size() < 2) {
    throw std::runtime_error("patch targets CSV: no target columns");
  }
  PatchTargets out;
  out.names.assign(rows[0].begin() + 1, rows[0].end());
  for (std::size_t r = 1; r < rows.size(); ++r) {
    if (rows[r].size() != rows[0].size()) {
      throw std::runtime_error("patch targets CSV: ragged row");
    }
    out.patch_ids.push_back(static_cast<int>(csv::parse_int(rows[r][0])));
    std::vector<double> vals(out.names.size());
    for (std::size_t j = 0; j < vals.size(); ++j) {
      vals[j] = csv::parse_double(rows[r][j + 1]);
      if (!std::isfinite(vals[j])) {
        throw std::runtime_error("patch targets CSV: non-finite target");
      }
    }
    out.values.push_back(std::move(vals));
  }
  return out;
}

void write_patch_targets_csv(const PatchTargets& targets,
                             const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << "patch_id";
  for (const auto& n : targets.names) out << ',' << n;
  out << '\n';
  for (std::size_t i = 0; i < targets.patch_ids.size(); ++i) {
    out << targets.patch_ids[i];
    for (const double v : targets.values[i]) out << ',' << csv::format_double(v);
    out << '\n';
  }
}

PixelSplit load_pixel_split_csv(const std::filesystem::path& path, int height,
                                int width) {
  const auto rows = csv::read(path);
  require_header(rows, {"row", "col", "split"}, "split CSV");
  PixelSplit out;
  std::set<int> seen;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    if (rows[r].size() != 3) throw std::runtime_error("split CSV: bad row");
    const int p = checked_pixel(csv::parse_int(rows[r][0]),
                                csv::parse_int(rows[r][1]), height, width,
                                "split CSV");
    if (!seen.insert(p).second) {
      throw std::runtime_error(
          "split CSV: pixel listed twice; train and test must be disjoint "
          "(information-leak guard)");
    }
    if (rows[r][2] == "train") {
      out.train.push_back(p);
    } else if (rows[r][2] == "test") {
      out.test.push_back(p);
    } else {
      throw std::runtime_error("split CSV: split must be train or test, got '" +
                               rows[r][2] + "'");
    }
  }
  return out;
}

void write_pixel_split_csv(const PixelSplit& split, int width,
                           const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << "row,col,split\n";
  for (const int p : split.train) {
    out << p / width << ',' << p % width << ",train\n";
  }
  for (const int p : split.test) {
    out << p / width << ',' << p % width << ",test\n";
  }
}

PatchSplit load_patch_split_csv(const std::filesystem::path& path) {
  const auto rows = csv::read(path);
  require_header(rows, {"patch_id", "split"}, "patch split CSV");
  PatchSplit out;
  std::set<int> seen;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    if (rows[r].size() != 2) throw std::runtime_error("patch split CSV: bad row");
    const int id = static_cast<int>(csv::parse_int(rows[r][0]));
    if (!seen.insert(id).second) {
      throw std::runtime_error("patch split CSV: patch listed twice");
    }
    if (rows[r][1] == "train") {
      out.train.push_back(id);
    } else if (rows[r][1] == "test") {
      out.test.push_back(id);
    } else {
      throw std::runtime_error("patch split CSV: split must be train or test");
    }
  }
  return out;
}

void write_patch_split_csv(const PatchSplit& split,
                           const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << "patch_id,split\n";
  for (const int id : split.train) out << id << ",train\n";
  for (const int id : split.test) out << id << ",test\n";
}

}  // namespace pism
