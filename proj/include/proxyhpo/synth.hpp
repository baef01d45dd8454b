#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "proxyhpo/volume.hpp"
#include "proxyhpo/volume_io.hpp"

namespace proxyhpo {

struct FamilySpec {
  int count = 1;
  int profile = 0;
};

struct SynthConfig {
  int n_items = 12;
  Shape3 shape{32, 32, 32};
  Spacing3 spacing{1.5, 1.5, 2.0};
  std::vector<FamilySpec> families{{10, 0}, {1, 1}, {1, 2}};
  double jitter = 0.02;
  std::uint64_t seed = 0;

  void validate() const;
};

/// One large near-duplicate family (profile 0) plus two singletons
/// (profiles 1 and 2); a single family when n < 3.
std::vector<FamilySpec> default_families(int n_items);

/// Piecewise-constant intensity profile of a family, in HU-like units.
struct IntensityProfile {
  double organ_level;
  double background_level;
  double organ_texture;
  double background_texture;
  int texture_period;
};
IntensityProfile intensity_profile(int profile);

struct Ellipsoid {
  double cx, cy, cz;
  double rx, ry, rz;

  bool contains(int x, int y, int z) const;
};

struct SynthItem {
  std::string id;
  int family = 0;
  Ellipsoid organ{};
  Volume3D image;
  LabelMask label;
};

/// Items are generated independently from (seed, index); geometry and
/// texture are shared within a family, and members differ only by an
/// intensity scale of up to +-jitter and independent background noise.
std::vector<SynthItem> generate_items(const SynthConfig& config, int workers = 1);

/// Writes images/<id>.{bin,json}, labels/<id>.{bin,json} and manifest.json
/// under `out_dir`; returns the manifest.
DatasetManifest gen_synthetic_dataset(const SynthConfig& config,
                                      const std::filesystem::path& out_dir, int workers = 1);

}  // namespace proxyhpo
