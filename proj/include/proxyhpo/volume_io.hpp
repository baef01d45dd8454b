#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "proxyhpo/volume.hpp"

namespace proxyhpo {

// Raw format: "<name>.bin" holds little-endian float32 voxels x-fastest, and
// "<name>.json" is the sidecar {"shape":[nx,ny,nz],"spacing_mm":[..],
// "dtype":"f32","byte_order":"le"}.

/// Decodes a raw payload against its sidecar JSON text.
Volume3D decode_raw(std::span<const std::byte> payload, std::string_view sidecar_json);
Volume3D read_raw(const std::filesystem::path& image, const std::filesystem::path& sidecar);

struct RawLocation {
  std::filesystem::path payload;
  std::filesystem::path sidecar;
};

/// Accepts "<name>", "<name>.bin" or "<name>.json"; returns both file paths.
RawLocation raw_location(const std::filesystem::path& locator);

std::string encode_raw_sidecar(const Volume3D& volume);
std::vector<std::byte> encode_raw_payload(const Volume3D& volume);
RawLocation write_raw(const Volume3D& volume, const std::filesystem::path& locator);

/// Parses a single-file, uncompressed NIfTI-1 image (3D only). Endianness is
/// detected from sizeof_hdr. Orientation metadata is ignored.
Volume3D read_nifti1(std::span<const std::byte> bytes);
Volume3D read_nifti1_file(const std::filesystem::path& path);

/// Loads a volume by extension: ".nii" is NIfTI-1, anything else is raw.
Volume3D load_volume(const std::filesystem::path& locator);

std::vector<std::byte> read_file_bytes(const std::filesystem::path& path);

struct IntensityWindow {
  double lo = -57.0;
  double hi = 164.0;
};

struct ManifestItem {
  std::string id;
  std::filesystem::path image;
  std::filesystem::path label;
  std::optional<std::string> split_tag;
};

struct DatasetManifest {
  std::vector<ManifestItem> items;
  IntensityWindow normalization;

  std::vector<std::string> ids() const;
};

/// Relative locators are resolved against the manifest's directory.
DatasetManifest load_manifest(const std::filesystem::path& path);
/// Locators are written relative to the manifest's directory when possible.
void save_manifest(const DatasetManifest& manifest, const std::filesystem::path& path);

/// Checks id uniqueness and that every label loads with its image's geometry.
void validate_manifest(const DatasetManifest& manifest);

}  // namespace proxyhpo
