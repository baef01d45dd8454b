#include "proxyhpo/preprocess.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

#include "proxyhpo/error.hpp"

namespace proxyhpo {
namespace {

// Source coordinate of destination index i along one axis.
double source_coordinate(int i, int n_src, int n_dst) {
  if (n_dst == 1) return 0.0;
  return static_cast<double>(i) * static_cast<double>(n_src - 1) / static_cast<double>(n_dst - 1);
}

struct AxisSample {
  int lo = 0;
  int hi = 0;
  double t = 0.0;
};

std::vector<AxisSample> linear_samples(int n_src, int n_dst) {
  std::vector<AxisSample> out(static_cast<std::size_t>(n_dst));
  for (int i = 0; i < n_dst; ++i) {
    const double s = source_coordinate(i, n_src, n_dst);
    const int lo = std::min(static_cast<int>(std::floor(s)), n_src - 1);
    const int hi = std::min(lo + 1, n_src - 1);
    out[static_cast<std::size_t>(i)] = {lo, hi, s - lo};
  }
  return out;
}

std::vector<int> nearest_samples(int n_src, int n_dst) {
  std::vector<int> out(static_cast<std::size_t>(n_dst));
  for (int i = 0; i < n_dst; ++i) {
    const double s = source_coordinate(i, n_src, n_dst);
    // Round half down: 0.5 -> 0, 0.51 -> 1.
    const int idx = static_cast<int>(std::ceil(s - 0.5));
    out[static_cast<std::size_t>(i)] = std::clamp(idx, 0, n_src - 1);
  }
  return out;
}

void check_target(const Volume3D& volume, Shape3 target) {
  if (volume.empty()) throw Error(ErrorCode::kInvalidInput, "cannot resample an empty volume");
  if (target.nx < 1 || target.ny < 1 || target.nz < 1) {
    throw Error(ErrorCode::kInvalidInput, "target shape components must be >= 1");
  }
}

Spacing3 rescaled_spacing(const Volume3D& volume, Shape3 target) {
  const auto& s = volume.shape();
  const auto& sp = volume.spacing();
  return {sp.x * s.nx / target.nx, sp.y * s.ny / target.ny, sp.z * s.nz / target.nz};
}

double lerp(double a, double b, double t) { return t == 0.0 ? a : a + (b - a) * t; }

}  // namespace

Volume3D resample_trilinear(const Volume3D& volume, Shape3 target) {
  check_target(volume, target);
  const auto& src = volume.shape();
  const auto xs = linear_samples(src.nx, target.nx);
  const auto ys = linear_samples(src.ny, target.ny);
  const auto zs = linear_samples(src.nz, target.nz);

  std::vector<float> out(target.voxel_count());
  std::size_t k = 0;
  for (int z = 0; z < target.nz; ++z) {
    const auto& sz = zs[static_cast<std::size_t>(z)];
    for (int y = 0; y < target.ny; ++y) {
      const auto& sy = ys[static_cast<std::size_t>(y)];
      for (int x = 0; x < target.nx; ++x, ++k) {
        const auto& sx = xs[static_cast<std::size_t>(x)];
        auto v = [&](int xi, int yi, int zi) { return static_cast<double>(volume.at(xi, yi, zi)); };
        const double c00 = lerp(v(sx.lo, sy.lo, sz.lo), v(sx.hi, sy.lo, sz.lo), sx.t);
        const double c10 = lerp(v(sx.lo, sy.hi, sz.lo), v(sx.hi, sy.hi, sz.lo), sx.t);
        const double c01 = lerp(v(sx.lo, sy.lo, sz.hi), v(sx.hi, sy.lo, sz.hi), sx.t);
        const double c11 = lerp(v(sx.lo, sy.hi, sz.hi), v(sx.hi, sy.hi, sz.hi), sx.t);
        const double c0 = lerp(c00, c10, sy.t);
        const double c1 = lerp(c01, c11, sy.t);
        out[k] = static_cast<float>(lerp(c0, c1, sz.t));
      }
    }
  }
  return Volume3D(target, rescaled_spacing(volume, target), std::move(out));
}

LabelMask resample_nearest(const LabelMask& mask, Shape3 target) {
  check_target(mask.volume(), target);
  const auto& src = mask.shape();
  const auto xs = nearest_samples(src.nx, target.nx);
  const auto ys = nearest_samples(src.ny, target.ny);
  const auto zs = nearest_samples(src.nz, target.nz);

  std::vector<float> out(target.voxel_count());
  std::size_t k = 0;
  for (int z = 0; z < target.nz; ++z) {
    for (int y = 0; y < target.ny; ++y) {
      for (int x = 0; x < target.nx; ++x, ++k) {
        out[k] = mask.at(xs[static_cast<std::size_t>(x)], ys[static_cast<std::size_t>(y)],
                         zs[static_cast<std::size_t>(z)]);
      }
    }
  }
  return LabelMask(Volume3D(target, rescaled_spacing(mask.volume(), target), std::move(out)));
}

Volume3D intensity_window_normalize(const Volume3D& volume, double lo, double hi) {
  if (!(lo < hi)) throw Error(ErrorCode::kInvalidWindow, "window requires lo < hi");
  std::vector<float> out(volume.size());
  auto in = volume.voxels();
  const double width = hi - lo;
  for (std::size_t i = 0; i < in.size(); ++i) {
    const double v = std::clamp(static_cast<double>(in[i]), lo, hi);
    out[i] = static_cast<float>((v - lo) / width);
  }
  return Volume3D(volume.shape(), volume.spacing(), std::move(out));
}

BoundingBox label_bounding_box(const LabelMask& mask) {
  const auto& s = mask.shape();
  constexpr int kBig = std::numeric_limits<int>::max();
  BoundingBox box{{kBig, kBig, kBig}, {-1, -1, -1}};
  for (int z = 0; z < s.nz; ++z) {
    for (int y = 0; y < s.ny; ++y) {
      for (int x = 0; x < s.nx; ++x) {
        if (mask.at(x, y, z) == 0.0f) continue;
        box.min = {std::min(box.min.x, x), std::min(box.min.y, y), std::min(box.min.z, z)};
        box.max = {std::max(box.max.x, x), std::max(box.max.y, y), std::max(box.max.z, z)};
      }
    }
  }
  if (box.max.x < 0) throw Error(ErrorCode::kEmptyLabel, "label mask has no nonzero voxels");
  return box;
}

Volume3D crop(const Volume3D& volume, const BoundingBox& box) {
  const auto& s = volume.shape();
  if (box.min.x < 0 || box.min.y < 0 || box.min.z < 0 || box.max.x >= s.nx ||
      box.max.y >= s.ny || box.max.z >= s.nz || box.min.x > box.max.x ||
      box.min.y > box.max.y || box.min.z > box.max.z) {
    throw Error(ErrorCode::kInvalidInput, "crop box outside volume extent");
  }
  const Shape3 ext = box.extent();
  std::vector<float> out;
  out.reserve(ext.voxel_count());
  for (int z = box.min.z; z <= box.max.z; ++z) {
    for (int y = box.min.y; y <= box.max.y; ++y) {
      for (int x = box.min.x; x <= box.max.x; ++x) out.push_back(volume.at(x, y, z));
    }
  }
  return Volume3D(ext, volume.spacing(), std::move(out));
}

Volume3D labelcrop(const Volume3D& volume, const LabelMask& mask, int cube_size) {
  if (!volume.same_geometry(mask.volume())) {
    throw Error(ErrorCode::kGeometry, "image and label geometry differ");
  }
  if (cube_size < 1) throw Error(ErrorCode::kInvalidInput, "cube size must be >= 1");
  const auto box = label_bounding_box(mask);
  return resample_trilinear(crop(volume, box), {cube_size, cube_size, cube_size});
}

}  // namespace proxyhpo
