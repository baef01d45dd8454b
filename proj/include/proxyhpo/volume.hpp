#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <vector>

namespace proxyhpo {

struct Shape3 {
  int nx = 0;
  int ny = 0;
  int nz = 0;

  std::size_t voxel_count() const {
    return static_cast<std::size_t>(nx) * static_cast<std::size_t>(ny) *
           static_cast<std::size_t>(nz);
  }
  int operator[](int axis) const { return axis == 0 ? nx : (axis == 1 ? ny : nz); }
  friend bool operator==(const Shape3&, const Shape3&) = default;
};

struct Spacing3 {
  double x = 1.0;
  double y = 1.0;
  double z = 1.0;

  double operator[](int axis) const { return axis == 0 ? x : (axis == 1 ? y : z); }
  friend bool operator==(const Spacing3&, const Spacing3&) = default;
};

struct Index3 {
  int x = 0;
  int y = 0;
  int z = 0;
  friend bool operator==(const Index3&, const Index3&) = default;
};

/// A 3D scalar field stored x-fastest: index = x + nx * (y + ny * z).
///
/// Construction validates the geometry and rejects non-finite voxels, so a
/// Volume3D in hand always satisfies its invariants.
class Volume3D {
 public:
  Volume3D() = default;
  Volume3D(Shape3 shape, Spacing3 spacing, std::vector<float> voxels);
  /// Constant-filled volume.
  Volume3D(Shape3 shape, Spacing3 spacing, float fill = 0.0f);

  const Shape3& shape() const { return shape_; }
  const Spacing3& spacing() const { return spacing_; }
  std::span<const float> voxels() const { return voxels_; }
  std::span<float> mutable_voxels() { return voxels_; }
  std::size_t size() const { return voxels_.size(); }
  bool empty() const { return voxels_.empty(); }

  std::size_t linear_index(int x, int y, int z) const {
    return static_cast<std::size_t>(x) +
           static_cast<std::size_t>(shape_.nx) *
               (static_cast<std::size_t>(y) +
                static_cast<std::size_t>(shape_.ny) * static_cast<std::size_t>(z));
  }
  float at(int x, int y, int z) const { return voxels_[linear_index(x, y, z)]; }
  float& at(int x, int y, int z) { return voxels_[linear_index(x, y, z)]; }

  bool same_geometry(const Volume3D& other) const {
    return shape_ == other.shape_ && spacing_ == other.spacing_;
  }

  friend bool operator==(const Volume3D&, const Volume3D&) = default;

 private:
  Shape3 shape_;
  Spacing3 spacing_;
  std::vector<float> voxels_;
};

/// Segmentation label on the same grid as an image; whole, non-negative values.
class LabelMask {
 public:
  LabelMask() = default;
  explicit LabelMask(Volume3D volume);

  const Volume3D& volume() const { return volume_; }
  const Shape3& shape() const { return volume_.shape(); }
  const Spacing3& spacing() const { return volume_.spacing(); }
  std::span<const float> voxels() const { return volume_.voxels(); }
  float at(int x, int y, int z) const { return volume_.at(x, y, z); }

  friend bool operator==(const LabelMask&, const LabelMask&) = default;

 private:
  Volume3D volume_;
};

}  // namespace proxyhpo
