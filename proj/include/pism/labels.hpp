#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace pism {

inline constexpr int kUnlabeledClass = -1;

// Per-pixel class ids; -1 marks unlabeled pixels.
// CSV: header row,col,class
struct LabelMap {
  int height = 0;
  int width = 0;
  std::vector<int> classes;

  int at(int row, int col) const { return classes[row * width + col]; }
  int n_classes() const;  // 1 + max id, 0 if fully unlabeled
};

LabelMap load_labels_csv(const std::filesystem::path& path, int height,
                         int width);
void write_labels_csv(const LabelMap& labels,
                      const std::filesystem::path& path);

// Patch membership for patch-level regression targets.
// CSV: header patch_id,row,col
struct PatchSet {
  int width = 0;                            // decodes member pixel indices
  std::vector<int> patch_ids;               // ascending
  std::vector<std::vector<int>> members;    // pixel indices per patch

  int index_of(int patch_id) const;  // -1 when unknown
};

PatchSet load_patches_csv(const std::filesystem::path& path, int height,
                          int width);
void write_patches_csv(const PatchSet& patches,
                       const std::filesystem::path& path);

// Per-patch regression targets. CSV: header patch_id,<var names...>
struct PatchTargets {
  std::vector<std::string> names;
  std::vector<int> patch_ids;
  std::vector<std::vector<double>> values;  // aligned with patch_ids

  int index_of(int patch_id) const;
};

PatchTargets load_patch_targets_csv(const std::filesystem::path& path);
void write_patch_targets_csv(const PatchTargets& targets,
                             const std::filesystem::path& path);

// Train/test assignment. Pixel split CSV: header row,col,split with values
// train|test; loading refuses duplicates, so the two sides cannot overlap.
struct PixelSplit {
  std::vector<int> train;  // pixel indices, file order
  std::vector<int> test;
};

PixelSplit load_pixel_split_csv(const std::filesystem::path& path, int height,
                                int width);
void write_pixel_split_csv(const PixelSplit& split, int width,
                           const std::filesystem::path& path);

// Patch split CSV: header patch_id,split
struct PatchSplit {
  std::vector<int> train;
  std::vector<int> test;
};

PatchSplit load_patch_split_csv(const std::filesystem::path& path);
void write_patch_split_csv(const PatchSplit& split,
                           const std::filesystem::path& path);

}  // namespace pism
