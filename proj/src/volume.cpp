#include "proxyhpo/volume.hpp"

#include <cmath>
#include <string>

#include "proxyhpo/error.hpp"

namespace proxyhpo {
namespace {

void check_geometry(const Shape3& shape, const Spacing3& spacing) {
  if (shape.nx < 1 || shape.ny < 1 || shape.nz < 1) {
    throw Error(ErrorCode::kInvalidInput, "volume shape components must be >= 1");
  }
  for (int axis = 0; axis < 3; ++axis) {
    if (!(spacing[axis] > 0.0) || !std::isfinite(spacing[axis])) {
      throw Error(ErrorCode::kInvalidInput, "voxel spacing must be positive and finite");
    }
  }
}

}  // namespace

Volume3D::Volume3D(Shape3 shape, Spacing3 spacing, std::vector<float> voxels)
    : shape_(shape), spacing_(spacing), voxels_(std::move(voxels)) {
  check_geometry(shape_, spacing_);
  if (voxels_.size() != shape_.voxel_count()) {
    throw Error(ErrorCode::kGeometry,
                "voxel count " + std::to_string(voxels_.size()) + " does not match shape (" +
                    std::to_string(shape_.voxel_count()) + ")");
  }
  for (float v : voxels_) {
    if (!std::isfinite(v)) throw Error(ErrorCode::kInvalidInput, "non-finite voxel value");
  }
}

Volume3D::Volume3D(Shape3 shape, Spacing3 spacing, float fill)
    : shape_(shape), spacing_(spacing) {
  check_geometry(shape_, spacing_);
  if (!std::isfinite(fill)) throw Error(ErrorCode::kInvalidInput, "non-finite fill value");
  voxels_.assign(shape_.voxel_count(), fill);
}

LabelMask::LabelMask(Volume3D volume) : volume_(std::move(volume)) {
  for (float v : volume_.voxels()) {
    if (v < 0.0f || v != std::floor(v)) {
      throw Error(ErrorCode::kInvalidInput, "label values must be non-negative whole numbers");
    }
  }
}

}  // namespace proxyhpo
