#include "proxyhpo/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "proxyhpo/error.hpp"
#include "proxyhpo/parallel.hpp"
#include "proxyhpo/random.hpp"

namespace proxyhpo {
namespace fs = std::filesystem;

namespace {

constexpr double kNoiseSigma = 3.0;
constexpr std::uint64_t kFamilyStream = 1'000'000;

Ellipsoid family_geometry(const Shape3& shape, std::uint64_t seed, int family) {
  Rng rng(derive_seed(seed, kFamilyStream + static_cast<std::uint64_t>(family)));
  auto axis = [&](int n, double& center, double& radius) {
    radius = rng.uniform(0.18, 0.32) * n;
    // Integer centre with the whole ellipsoid at least one voxel inside.
    const int lo = static_cast<int>(std::ceil(radius)) + 1;
    const int hi = std::max(lo, n - 2 - static_cast<int>(std::ceil(radius)));
    center = lo + static_cast<int>(rng.below(static_cast<std::uint64_t>(hi - lo + 1)));
  };
  Ellipsoid e{};
  axis(shape.nx, e.cx, e.rx);
  axis(shape.ny, e.cy, e.ry);
  axis(shape.nz, e.cz, e.rz);
  return e;
}

}  // namespace

bool Ellipsoid::contains(int x, int y, int z) const {
  const double dx = (x - cx) / rx, dy = (y - cy) / ry, dz = (z - cz) / rz;
  return dx * dx + dy * dy + dz * dz <= 1.0;
}

void SynthConfig::validate() const {
  if (n_items < 1) throw Error(ErrorCode::kInvalidInput, "n_items must be >= 1");
  if (shape.nx < 8 || shape.ny < 8 || shape.nz < 8) {
    throw Error(ErrorCode::kInvalidInput, "synthetic shape must be at least 8^3");
  }
  if (!(jitter >= 0.0) || jitter >= 1.0) throw Error(ErrorCode::kInvalidInput, "jitter must be in [0, 1)");
  int total = 0;
  for (const auto& f : families) {
    if (f.count < 1 || f.profile < 0) throw Error(ErrorCode::kInvalidInput, "bad family spec");
    total += f.count;
  }
  if (total != n_items) {
    throw Error(ErrorCode::kInvalidInput, "family counts sum to " + std::to_string(total) +
                                              ", expected " + std::to_string(n_items));
  }
}

std::vector<FamilySpec> default_families(int n_items) {
  if (n_items < 3) return {{n_items, 0}};
  return {{n_items - 2, 0}, {1, 1}, {1, 2}};
}

IntensityProfile intensity_profile(int profile) {
  return {90.0 + 25.0 * (profile % 3), -15.0 - 12.0 * (profile % 2), 30.0, 15.0,
          3 + 2 * (profile % 4)};
}

std::vector<SynthItem> generate_items(const SynthConfig& config, int workers) {
  config.validate();
  struct Slot {
    int family;
    int profile;
  };
  std::vector<Slot> slots;
  for (std::size_t f = 0; f < config.families.size(); ++f) {
    for (int k = 0; k < config.families[f].count; ++k) {
      slots.push_back({static_cast<int>(f), config.families[f].profile});
    }
  }

  std::vector<SynthItem> items(slots.size());
  parallel_for(items.size(), workers, [&](std::size_t index) {
    const auto& slot = slots[index];
    const auto& s = config.shape;
    const auto organ = family_geometry(s, config.seed, slot.family);
    const auto profile = intensity_profile(slot.profile);
    Rng rng(derive_seed(config.seed, index));
    const double scale = 1.0 + config.jitter * rng.uniform(-1.0, 1.0);

    std::vector<float> image(s.voxel_count());
    std::vector<float> label(s.voxel_count());
    std::size_t k = 0;
    for (int z = 0; z < s.nz; ++z) {
      for (int y = 0; y < s.ny; ++y) {
        for (int x = 0; x < s.nx; ++x, ++k) {
          const int p = profile.texture_period;
          const bool checker = ((x / p + y / p + z / p) % 2) == 0;
          const bool inside = organ.contains(x, y, z);
          double v = inside ? profile.organ_level + (checker ? 1 : -1) * profile.organ_texture
                            : profile.background_level +
                                  (checker ? 1 : -1) * profile.background_texture;
          v = v * scale + kNoiseSigma * rng.normal();
          image[k] = static_cast<float>(v);
          label[k] = inside ? 1.0f : 0.0f;
        }
      }
    }
    char id[32];
    std::snprintf(id, sizeof(id), "case_%03zu", index);
    items[index] = {id, slot.family, organ, Volume3D(s, config.spacing, std::move(image)),
                    LabelMask(Volume3D(s, config.spacing, std::move(label)))};
  });
  return items;
}

DatasetManifest gen_synthetic_dataset(const SynthConfig& config, const fs::path& out_dir,
                                      int workers) {
  const auto items = generate_items(config, workers);
  std::error_code ec;
  fs::create_directories(out_dir / "images", ec);
  fs::create_directories(out_dir / "labels", ec);
  if (ec) throw Error(ErrorCode::kIo, "cannot create " + out_dir.string() + ": " + ec.message());

  DatasetManifest manifest;
  manifest.normalization = {-57.0, 164.0};
  for (const auto& item : items) {
    const auto image = write_raw(item.image, out_dir / "images" / item.id);
    const auto label = write_raw(item.label.volume(), out_dir / "labels" / item.id);
    manifest.items.push_back({item.id, image.payload, label.payload, std::nullopt});
  }
  save_manifest(manifest, out_dir / "manifest.json");
  return load_manifest(out_dir / "manifest.json");
}

}  // namespace proxyhpo
