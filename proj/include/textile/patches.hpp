#pragma once

#include <vector>

#include "textile/image.hpp"
#include "textile/rng.hpp"

namespace textile {

inline constexpr int kThumbSide = 4;
// Per-channel mean and standard deviation plus a pooled thumbnail.
inline constexpr int kPatchFeatureDim = 3 + 3 + kThumbSide * kThumbSide * 3;

// Row-major grid of per-patch feature vectors.
struct PatchGrid {
  int grid = 0;
  std::vector<std::vector<Real>> features;

  int patch_count() const { return static_cast<int>(features.size()); }
};

// Cuts the image into grid x grid equal-pixel blocks, row-major. Dimensions
// must divide evenly so every patch has the same pixel count.
std::vector<Image> split_patches(const Image& image, int grid);

std::vector<Real> extract_patch_features(const Image& patch);

PatchGrid extract_grid(const Image& image, int grid);

struct MaskedPatchGrid {
  PatchGrid grid; // masked entries zeroed in place
  std::vector<int> masked_positions;
  std::vector<std::vector<Real>> original_features; // parallel to masked_positions
};

// Masks each patch independently with probability prob, forcing one when the
// draw selects none. Masked features become exact zero vectors; the originals
// are kept as prediction targets.
MaskedPatchGrid apply_patch_mask(const PatchGrid& grid, double prob, Rng& rng);

} // namespace textile
