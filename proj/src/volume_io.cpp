#include "proxyhpo/volume_io.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <set>

#include <nlohmann/json.hpp>

#include "proxyhpo/error.hpp"

namespace proxyhpo {
namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

template <typename T>
T load_scalar(std::span<const std::byte> bytes, std::size_t offset, bool big_endian) {
  static_assert(std::is_trivially_copyable_v<T>);
  std::array<std::byte, sizeof(T)> buf{};
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    buf[i] = bytes[offset + (big_endian ? sizeof(T) - 1 - i : i)];
  }
  if constexpr (std::endian::native == std::endian::big) {
    std::reverse(buf.begin(), buf.end());
  }
  return std::bit_cast<T>(buf);
}

void store_f32_le(std::byte* out, float value) {
  auto bits = std::bit_cast<std::uint32_t>(value);
  for (int i = 0; i < 4; ++i) out[i] = static_cast<std::byte>((bits >> (8 * i)) & 0xffu);
}

void write_file(const fs::path& path, const void* data, std::size_t size) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIo, "cannot open for writing: " + path.string());
  out.write(static_cast<const char*>(data), static_cast<std::streamsize>(size));
  if (!out) throw Error(ErrorCode::kIo, "write failed: " + path.string());
}

std::string read_text(const fs::path& path) {
  auto bytes = read_file_bytes(path);
  return std::string(reinterpret_cast<const char*>(bytes.data()), bytes.size());
}

// NIfTI-1 header field offsets.
constexpr std::size_t kNiftiHeaderSize = 348;
constexpr std::size_t kNiftiMinimumFile = 352;
constexpr std::size_t kDimOffset = 40;
constexpr std::size_t kDatatypeOffset = 70;
constexpr std::size_t kPixdimOffset = 76;
constexpr std::size_t kVoxOffsetOffset = 108;
constexpr std::size_t kSlopeOffset = 112;
constexpr std::size_t kInterOffset = 116;
constexpr std::size_t kMagicOffset = 344;

}  // namespace

std::vector<std::byte> read_file_bytes(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open: " + path.string());
  in.seekg(0, std::ios::end);
  const auto size = static_cast<std::size_t>(in.tellg());
  in.seekg(0, std::ios::beg);
  std::vector<std::byte> bytes(size);
  in.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(size));
  if (!in) throw Error(ErrorCode::kIo, "read failed: " + path.string());
  return bytes;
}

Volume3D decode_raw(std::span<const std::byte> payload, std::string_view sidecar_json) {
  json side;
  try {
    side = json::parse(sidecar_json);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::kUnsupportedFormat, std::string("sidecar is not JSON: ") + e.what());
  }
  if (!side.is_object() || !side.contains("shape") || !side.contains("spacing_mm")) {
    throw Error(ErrorCode::kUnsupportedFormat, "sidecar must contain shape and spacing_mm");
  }
  const auto dtype = side.value("dtype", std::string{});
  const auto order = side.value("byte_order", std::string{});
  if (dtype != "f32") throw Error(ErrorCode::kUnsupportedFormat, "dtype '" + dtype + "'");
  if (order != "le") throw Error(ErrorCode::kUnsupportedFormat, "byte_order '" + order + "'");

  const auto& sh = side["shape"];
  const auto& sp = side["spacing_mm"];
  if (!sh.is_array() || !sp.is_array()) {
    throw Error(ErrorCode::kUnsupportedFormat, "shape and spacing_mm must be arrays");
  }
  if (sh.size() != 3 || sp.size() != 3) {
    throw Error(ErrorCode::kDimensionality, "shape and spacing_mm must have 3 entries");
  }
  Shape3 shape;
  Spacing3 spacing;
  try {
    shape = {sh[0].get<int>(), sh[1].get<int>(), sh[2].get<int>()};
    spacing = {sp[0].get<double>(), sp[1].get<double>(), sp[2].get<double>()};
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kUnsupportedFormat, std::string("bad sidecar field: ") + e.what());
  }
  if (shape.nx < 1 || shape.ny < 1 || shape.nz < 1) {
    throw Error(ErrorCode::kInvalidInput, "shape components must be >= 1");
  }
  const std::size_t count = shape.voxel_count();
  if (payload.size() != 4 * count) {
    throw Error(ErrorCode::kCorruptPayload, "payload has " + std::to_string(payload.size()) +
                                                " bytes, expected " + std::to_string(4 * count));
  }
  std::vector<float> voxels(count);
  for (std::size_t i = 0; i < count; ++i) voxels[i] = load_scalar<float>(payload, 4 * i, false);
  return Volume3D(shape, spacing, std::move(voxels));
}

Volume3D read_raw(const fs::path& image, const fs::path& sidecar) {
  const auto payload = read_file_bytes(image);
  return decode_raw(payload, read_text(sidecar));
}

RawLocation raw_location(const fs::path& locator) {
  fs::path stem = locator;
  if (stem.extension() == ".bin" || stem.extension() == ".json") stem.replace_extension();
  fs::path payload = stem;
  payload += ".bin";
  fs::path sidecar = stem;
  sidecar += ".json";
  return {payload, sidecar};
}

std::string encode_raw_sidecar(const Volume3D& volume) {
  const auto& s = volume.shape();
  const auto& sp = volume.spacing();
  json side = {{"shape", {s.nx, s.ny, s.nz}},
               {"spacing_mm", {sp.x, sp.y, sp.z}},
               {"dtype", "f32"},
               {"byte_order", "le"}};
  return side.dump();
}

std::vector<std::byte> encode_raw_payload(const Volume3D& volume) {
  std::vector<std::byte> out(4 * volume.size());
  auto voxels = volume.voxels();
  for (std::size_t i = 0; i < voxels.size(); ++i) store_f32_le(out.data() + 4 * i, voxels[i]);
  return out;
}

RawLocation write_raw(const Volume3D& volume, const fs::path& locator) {
  const auto loc = raw_location(locator);
  const auto payload = encode_raw_payload(volume);
  const auto sidecar = encode_raw_sidecar(volume);
  write_file(loc.payload, payload.data(), payload.size());
  write_file(loc.sidecar, sidecar.data(), sidecar.size());
  return loc;
}

Volume3D read_nifti1(std::span<const std::byte> bytes) {
  if (bytes.size() >= 2 && bytes[0] == std::byte{0x1f} && bytes[1] == std::byte{0x8b}) {
    throw Error(ErrorCode::kUnsupportedFormat, "compressed NIfTI is not supported");
  }
  if (bytes.size() < kNiftiMinimumFile) {
    throw Error(ErrorCode::kNotNifti, "file shorter than 352 bytes");
  }
  bool big_endian = false;
  if (load_scalar<std::int32_t>(bytes, 0, false) == kNiftiHeaderSize) {
    big_endian = false;
  } else if (load_scalar<std::int32_t>(bytes, 0, true) == kNiftiHeaderSize) {
    big_endian = true;
  } else {
    throw Error(ErrorCode::kNotNifti, "sizeof_hdr is not 348");
  }
  const auto* magic = reinterpret_cast<const char*>(bytes.data() + kMagicOffset);
  if (std::memcmp(magic, "ni1\0", 4) == 0) {
    throw Error(ErrorCode::kUnsupportedFormat, "header/image pairs (.hdr/.img) are not supported");
  }
  if (std::memcmp(magic, "n+1\0", 4) != 0) throw Error(ErrorCode::kNotNifti, "bad magic");

  auto i16 = [&](std::size_t off) { return load_scalar<std::int16_t>(bytes, off, big_endian); };
  auto f32 = [&](std::size_t off) { return load_scalar<float>(bytes, off, big_endian); };

  const int rank = i16(kDimOffset);
  if (rank != 3) {
    throw Error(ErrorCode::kDimensionality, "dim[0] = " + std::to_string(rank) + ", expected 3");
  }
  const Shape3 shape{i16(kDimOffset + 2), i16(kDimOffset + 4), i16(kDimOffset + 6)};
  if (shape.nx < 1 || shape.ny < 1 || shape.nz < 1) {
    throw Error(ErrorCode::kDimensionality, "non-positive dimension");
  }
  const Spacing3 spacing{f32(kPixdimOffset + 4), f32(kPixdimOffset + 8), f32(kPixdimOffset + 12)};

  const int datatype = i16(kDatatypeOffset);
  std::size_t width = 0;
  switch (datatype) {
    case 2: width = 1; break;
    case 4: width = 2; break;
    case 8: width = 4; break;
    case 16: width = 4; break;
    case 64: width = 8; break;
    default:
      throw Error(ErrorCode::kUnsupportedFormat, "datatype " + std::to_string(datatype));
  }

  const float vox_offset_f = f32(kVoxOffsetOffset);
  if (!(vox_offset_f >= 0.0f) || !std::isfinite(vox_offset_f)) {
    throw Error(ErrorCode::kCorruptPayload, "invalid vox_offset");
  }
  const auto vox_offset = static_cast<std::size_t>(vox_offset_f);
  const std::size_t count = shape.voxel_count();
  if (vox_offset + count * width > bytes.size()) {
    throw Error(ErrorCode::kCorruptPayload, "voxel data extends past end of file");
  }

  double slope = f32(kSlopeOffset);
  const double inter = f32(kInterOffset);
  if (slope == 0.0) slope = 1.0;

  std::vector<float> voxels(count);
  for (std::size_t i = 0; i < count; ++i) {
    const std::size_t off = vox_offset + i * width;
    double raw = 0.0;
    switch (datatype) {
      case 2: raw = std::to_integer<std::uint8_t>(bytes[off]); break;
      case 4: raw = load_scalar<std::int16_t>(bytes, off, big_endian); break;
      case 8: raw = load_scalar<std::int32_t>(bytes, off, big_endian); break;
      case 16: raw = load_scalar<float>(bytes, off, big_endian); break;
      case 64: raw = load_scalar<double>(bytes, off, big_endian); break;
    }
    voxels[i] = static_cast<float>(raw * slope + inter);
  }
  return Volume3D(shape, spacing, std::move(voxels));
}

Volume3D read_nifti1_file(const fs::path& path) {
  if (path.extension() == ".gz") {
    throw Error(ErrorCode::kUnsupportedFormat, "compressed NIfTI is not supported");
  }
  if (path.extension() == ".hdr" || path.extension() == ".img") {
    throw Error(ErrorCode::kUnsupportedFormat, "header/image pairs (.hdr/.img) are not supported");
  }
  return read_nifti1(read_file_bytes(path));
}

Volume3D load_volume(const fs::path& locator) {
  const auto ext = locator.extension();
  if (ext == ".nii" || ext == ".gz" || ext == ".hdr" || ext == ".img") {
    return read_nifti1_file(locator);
  }
  const auto loc = raw_location(locator);
  return read_raw(loc.payload, loc.sidecar);
}

std::vector<std::string> DatasetManifest::ids() const {
  std::vector<std::string> out;
  out.reserve(items.size());
  for (const auto& item : items) out.push_back(item.id);
  return out;
}

DatasetManifest load_manifest(const fs::path& path) {
  json doc;
  try {
    doc = json::parse(read_text(path));
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::kInvalidInput, "manifest is not JSON: " + std::string(e.what()));
  }
  const fs::path base = path.parent_path();
  auto resolve = [&](const std::string& loc) {
    fs::path p(loc);
    return p.is_absolute() ? p : base / p;
  };

  DatasetManifest manifest;
  try {
    for (const auto& entry : doc.at("items")) {
      ManifestItem item;
      item.id = entry.at("id").get<std::string>();
      item.image = resolve(entry.at("image").get<std::string>());
      item.label = resolve(entry.at("label").get<std::string>());
      if (entry.contains("split") && entry["split"].is_string()) {
        item.split_tag = entry["split"].get<std::string>();
      }
      manifest.items.push_back(std::move(item));
    }
    if (doc.contains("normalization")) {
      manifest.normalization.lo = doc["normalization"].at("lo").get<double>();
      manifest.normalization.hi = doc["normalization"].at("hi").get<double>();
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kInvalidInput, "malformed manifest: " + std::string(e.what()));
  }

  std::set<std::string> seen;
  for (const auto& item : manifest.items) {
    if (!seen.insert(item.id).second) {
      throw Error(ErrorCode::kInvalidInput, "duplicate manifest id '" + item.id + "'");
    }
  }
  return manifest;
}

void save_manifest(const DatasetManifest& manifest, const fs::path& path) {
  const fs::path base = path.parent_path().empty() ? fs::path(".") : path.parent_path();
  auto relative = [&](const fs::path& p) {
    std::error_code ec;
    auto rel = fs::relative(p, base, ec);
    return (ec || rel.empty()) ? p.generic_string() : rel.generic_string();
  };
  json items = json::array();
  for (const auto& item : manifest.items) {
    json entry = {{"id", item.id}, {"image", relative(item.image)}, {"label", relative(item.label)}};
    if (item.split_tag) entry["split"] = *item.split_tag;
    items.push_back(std::move(entry));
  }
  json doc = {{"items", std::move(items)},
              {"normalization",
               {{"lo", manifest.normalization.lo}, {"hi", manifest.normalization.hi}}}};
  const auto text = doc.dump(2) + "\n";
  write_file(path, text.data(), text.size());
}

void validate_manifest(const DatasetManifest& manifest) {
  std::set<std::string> seen;
  for (const auto& item : manifest.items) {
    if (!seen.insert(item.id).second) {
      throw Error(ErrorCode::kInvalidInput, "duplicate manifest id '" + item.id + "'");
    }
    const auto image = load_volume(item.image);
    const auto label = load_volume(item.label);
    if (!image.same_geometry(label)) {
      throw Error(ErrorCode::kGeometry, "item '" + item.id + "': label geometry differs from image");
    }
    LabelMask{label};
  }
}

}  // namespace proxyhpo
