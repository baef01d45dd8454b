#pragma once

#include "proxyhpo/volume.hpp"

namespace proxyhpo {

/// Inclusive voxel-coordinate box.
struct BoundingBox {
  Index3 min;
  Index3 max;

  Shape3 extent() const { return {max.x - min.x + 1, max.y - min.y + 1, max.z - min.z + 1}; }
  friend bool operator==(const BoundingBox&, const BoundingBox&) = default;
};

constexpr int kDefaultCubeSize = 64;

// Resampling uses corner-aligned grids: destination index i maps to source
// coordinate i * (n_src - 1) / (n_dst - 1), and a single-voxel destination
// axis maps to source index 0. Spacing is rescaled by n_src / n_dst so the
// physical extent is preserved.
Volume3D resample_trilinear(const Volume3D& volume, Shape3 target);
/// Nearest-neighbour pickup; a coordinate exactly halfway rounds to the lower index.
LabelMask resample_nearest(const LabelMask& mask, Shape3 target);

/// Clamps to [lo, hi] and maps affinely onto [0, 1].
Volume3D intensity_window_normalize(const Volume3D& volume, double lo, double hi);

/// Minimal box containing every nonzero voxel.
BoundingBox label_bounding_box(const LabelMask& mask);

Volume3D crop(const Volume3D& volume, const BoundingBox& box);

/// Crop to the label's bounding box, then resample to cube_size^3.
Volume3D labelcrop(const Volume3D& volume, const LabelMask& mask, int cube_size = kDefaultCubeSize);

}  // namespace proxyhpo
