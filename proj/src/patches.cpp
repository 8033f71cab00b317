#include "textile/patches.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace textile {

std::vector<Image> split_patches(const Image& image, int grid) {
  if (grid <= 0) throw std::invalid_argument("split_patches: grid must be positive");
  if (image.height % grid != 0 || image.width % grid != 0)
    throw std::invalid_argument("split_patches: " + std::to_string(image.height) + "x" +
                                std::to_string(image.width) + " not divisible by grid " +
                                std::to_string(grid));
  const int ph = image.height / grid;
  const int pw = image.width / grid;
  std::vector<Image> patches;
  patches.reserve(static_cast<size_t>(grid) * grid);
  for (int gy = 0; gy < grid; ++gy)
    for (int gx = 0; gx < grid; ++gx) {
      Image p = Image::zeros(ph, pw);
      for (int y = 0; y < ph; ++y)
        for (int x = 0; x < pw; ++x)
          for (int c = 0; c < 3; ++c) p.at(y, x, c) = image.at(gy * ph + y, gx * pw + x, c);
      patches.push_back(std::move(p));
    }
  return patches;
}

std::vector<Real> extract_patch_features(const Image& patch) {
  std::vector<Real> feat;
  feat.reserve(kPatchFeatureDim);
  const int n = patch.height * patch.width;

  Real mean[3] = {0, 0, 0};
  for (int y = 0; y < patch.height; ++y)
    for (int x = 0; x < patch.width; ++x)
      for (int c = 0; c < 3; ++c) mean[c] += patch.at(y, x, c);
  for (int c = 0; c < 3; ++c) {
    mean[c] /= n;
    feat.push_back(mean[c]);
  }

  Real var[3] = {0, 0, 0};
  for (int y = 0; y < patch.height; ++y)
    for (int x = 0; x < patch.width; ++x)
      for (int c = 0; c < 3; ++c) {
        const Real d = patch.at(y, x, c) - mean[c];
        var[c] += d * d;
      }
  for (int c = 0; c < 3; ++c) feat.push_back(std::sqrt(var[c] / n));

  // Average-pooled thumbnail; cell bounds by integer interpolation, with a
  // one-pixel floor so tiny patches still produce a full-length vector.
  for (int ty = 0; ty < kThumbSide; ++ty) {
    const int y0 = std::min(ty * patch.height / kThumbSide, patch.height - 1);
    const int y1 = std::max((ty + 1) * patch.height / kThumbSide, y0 + 1);
    for (int tx = 0; tx < kThumbSide; ++tx) {
      const int x0 = std::min(tx * patch.width / kThumbSide, patch.width - 1);
      const int x1 = std::max((tx + 1) * patch.width / kThumbSide, x0 + 1);
      Real cell[3] = {0, 0, 0};
      for (int y = y0; y < y1; ++y)
        for (int x = x0; x < x1; ++x)
          for (int c = 0; c < 3; ++c) cell[c] += patch.at(y, x, c);
      const Real count = static_cast<Real>((y1 - y0) * (x1 - x0));
      for (int c = 0; c < 3; ++c) feat.push_back(cell[c] / count);
    }
  }
  return feat;
}

PatchGrid extract_grid(const Image& image, int grid) {
  PatchGrid pg;
  pg.grid = grid;
  for (const Image& p : split_patches(image, grid))
    pg.features.push_back(extract_patch_features(p));
  return pg;
}

MaskedPatchGrid apply_patch_mask(const PatchGrid& grid, double prob, Rng& rng) {
  if (prob < 0.0 || prob >= 1.0)
    throw std::invalid_argument("apply_patch_mask: probability " + std::to_string(prob) +
                                " outside [0, 1)");
  MaskedPatchGrid masked;
  masked.grid = grid;

  std::vector<int> selected;
  for (int i = 0; i < grid.patch_count(); ++i)
    if (rng.bernoulli(prob)) selected.push_back(i);
  if (selected.empty() && grid.patch_count() > 0)
    selected.push_back(static_cast<int>(rng.uniform_int(grid.patch_count())));

  for (int i : selected) {
    masked.masked_positions.push_back(i);
    masked.original_features.push_back(grid.features[i]);
    std::fill(masked.grid.features[i].begin(), masked.grid.features[i].end(), Real(0));
  }
  return masked;
}

} // namespace textile
