#include <doctest.h>

#include <cstring>
#include <filesystem>
#include <fstream>
#include <random>

#include <nlohmann/json.hpp>

#include "oracles.hpp"
#include "proxyhpo/error.hpp"
#include "proxyhpo/volume_io.hpp"

using namespace proxyhpo;
namespace fs = std::filesystem;

namespace {

fs::path data_dir() { return PROXYHPO_TEST_DATA_DIR; }

fs::path scratch_dir(const std::string& name) {
  auto dir = fs::temp_directory_path() / ("proxyhpo_test_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an Error");
  return ErrorCode::kIo;
}

std::vector<std::byte> as_bytes(const std::string& s) {
  std::vector<std::byte> out(s.size());
  std::memcpy(out.data(), s.data(), s.size());
  return out;
}

// Minimal NIfTI-1 writer for negative cases.
std::vector<std::byte> nifti_bytes(short rank, short datatype, std::size_t voxels, int width) {
  std::vector<std::byte> b(352 + voxels * static_cast<std::size_t>(width));
  auto put = [&](std::size_t off, auto v) { std::memcpy(b.data() + off, &v, sizeof(v)); };
  put(0, std::int32_t{348});
  put(40, rank);
  put(42, short{2});
  put(44, short{2});
  put(46, short{2});
  put(70, datatype);
  put(80, 1.0f);
  put(84, 1.0f);
  put(88, 1.0f);
  put(108, 352.0f);
  std::memcpy(b.data() + 344, "n+1\0", 4);
  return b;
}

}  // namespace

TEST_SUITE("volume_io") {
  TEST_CASE("golden NIfTI float32 parses identically in both byte orders") {
    for (const char* name : {"golden_f32_le.nii", "golden_f32_be.nii"}) {
      CAPTURE(name);
      const auto v = read_nifti1_file(data_dir() / name);
      CHECK(v.shape() == Shape3{4, 4, 4});
      CHECK(v.spacing() == Spacing3{1.5, 2.0, 2.5});
      for (int z = 0; z < 4; ++z)
        for (int y = 0; y < 4; ++y)
          for (int x = 0; x < 4; ++x) CHECK(v.at(x, y, z) == x + 10 * y + 100 * z + 0.25f);
    }
  }

  TEST_CASE("golden NIfTI int16 applies slope and intercept") {
    const auto v = read_nifti1_file(data_dir() / "golden_i16_scaled_be.nii");
    CHECK(v.shape() == Shape3{2, 3, 4});
    CHECK(v.spacing() == Spacing3{0.5, 0.5, 3.0});
    for (std::size_t i = 0; i < v.size(); ++i) {
      CHECK(v.voxels()[i] == static_cast<float>((static_cast<int>(i) - 12) * 2 - 1024));
    }
  }

  TEST_CASE("NIfTI rejections carry the right code") {
    auto ok = nifti_bytes(3, 16, 8, 4);
    CHECK_NOTHROW(read_nifti1(ok));

    auto four_d = nifti_bytes(4, 16, 8, 4);
    CHECK(code_of([&] { read_nifti1(four_d); }) == ErrorCode::kDimensionality);

    auto bad_type = nifti_bytes(3, 128, 8, 3);
    CHECK(code_of([&] { read_nifti1(bad_type); }) == ErrorCode::kUnsupportedFormat);

    auto bad_magic = ok;
    std::memcpy(bad_magic.data() + 344, "xxxx", 4);
    CHECK(code_of([&] { read_nifti1(bad_magic); }) == ErrorCode::kNotNifti);

    auto pair = ok;
    std::memcpy(pair.data() + 344, "ni1\0", 4);
    CHECK(code_of([&] { read_nifti1(pair); }) == ErrorCode::kUnsupportedFormat);

    auto truncated = ok;
    truncated.resize(352 + 10);
    CHECK(code_of([&] { read_nifti1(truncated); }) == ErrorCode::kCorruptPayload);

    std::vector<std::byte> gz{std::byte{0x1f}, std::byte{0x8b}, std::byte{8}};
    CHECK(code_of([&] { read_nifti1(gz); }) == ErrorCode::kUnsupportedFormat);

    std::vector<std::byte> tiny(100);
    CHECK(code_of([&] { read_nifti1(tiny); }) == ErrorCode::kNotNifti);
  }

  TEST_CASE("raw round trip is bit exact for random volumes") {
    std::mt19937_64 gen(1);
    std::uniform_int_distribution<int> dim(1, 9);
    std::uniform_real_distribution<double> sp(0.1, 5.0);
    for (int t = 0; t < 200; ++t) {
      const Shape3 shape{dim(gen), dim(gen), dim(gen)};
      std::vector<float> vox(shape.voxel_count());
      for (auto& v : vox) v = static_cast<float>(std::uniform_real_distribution<double>(-1e6, 1e6)(gen));
      const Volume3D vol(shape, {sp(gen), sp(gen), sp(gen)}, vox);
      const auto back = decode_raw(encode_raw_payload(vol), encode_raw_sidecar(vol));
      REQUIRE(back == vol);
      CHECK(std::memcmp(back.voxels().data(), vol.voxels().data(), vol.size() * 4) == 0);
    }
  }

  TEST_CASE("raw files round trip through disk") {
    const auto dir = scratch_dir("raw");
    const Volume3D vol({3, 2, 2}, {0.5, 1.0, 2.0}, std::vector<float>{1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12});
    const auto loc = write_raw(vol, dir / "x");
    CHECK(loc.payload.extension() == ".bin");
    CHECK(loc.sidecar.extension() == ".json");
    CHECK(read_raw(loc.payload, loc.sidecar) == vol);
    CHECK(load_volume(dir / "x.bin") == vol);
    const auto side = nlohmann::json::parse(encode_raw_sidecar(vol));
    CHECK(side["shape"] == nlohmann::json::array({3, 2, 2}));
    CHECK(side["dtype"] == "f32");
    CHECK(side["byte_order"] == "le");
  }

  TEST_CASE("raw decode rejects inconsistent inputs") {
    const std::string side = R"({"shape":[2,2,2],"spacing_mm":[1,1,1],"dtype":"f32","byte_order":"le"})";
    std::vector<std::byte> short_payload(28);
    CHECK(code_of([&] { decode_raw(short_payload, side); }) == ErrorCode::kCorruptPayload);

    std::vector<std::byte> payload(32);
    CHECK_NOTHROW(decode_raw(payload, side));
    const std::string f64 = R"({"shape":[2,2,2],"spacing_mm":[1,1,1],"dtype":"f64","byte_order":"le"})";
    CHECK(code_of([&] { decode_raw(payload, f64); }) == ErrorCode::kUnsupportedFormat);
    const std::string two_d = R"({"shape":[2,2],"spacing_mm":[1,1],"dtype":"f32","byte_order":"le"})";
    CHECK(code_of([&] { decode_raw(payload, two_d); }) == ErrorCode::kDimensionality);

    std::vector<std::byte> nan_payload(32);
    const float nan = std::numeric_limits<float>::quiet_NaN();
    std::memcpy(nan_payload.data() + 4, &nan, 4);
    CHECK_THROWS_AS(decode_raw(nan_payload, side), Error);
  }

  TEST_CASE("label masks must hold whole non-negative values") {
    CHECK_NOTHROW(LabelMask(Volume3D({2, 1, 1}, {}, std::vector<float>{0, 2})));
    CHECK_THROWS_AS(LabelMask(Volume3D({2, 1, 1}, {}, std::vector<float>{0, 0.5f})), Error);
    CHECK_THROWS_AS(LabelMask(Volume3D({2, 1, 1}, {}, std::vector<float>{-1, 0})), Error);
  }

  TEST_CASE("manifest save and load round trip with relative paths") {
    const auto dir = scratch_dir("manifest");
    const Volume3D vol({2, 2, 2}, {}, 1.0f);
    const Volume3D lab({2, 2, 2}, {}, 1.0f);
    fs::create_directories(dir / "img");
    fs::create_directories(dir / "lab");
    DatasetManifest m;
    for (int i = 0; i < 3; ++i) {
      const auto id = "item" + std::to_string(i);
      write_raw(vol, dir / "img" / id);
      write_raw(lab, dir / "lab" / id);
      m.items.push_back({id, dir / "img" / (id + ".bin"), dir / "lab" / (id + ".bin"), std::nullopt});
    }
    m.normalization = {-10.0, 10.0};
    save_manifest(m, dir / "manifest.json");
    const auto doc = nlohmann::json::parse(std::ifstream(dir / "manifest.json"));
    CHECK(doc["items"][0]["image"] == "img/item0.bin");

    const auto back = load_manifest(dir / "manifest.json");
    CHECK(back.ids() == m.ids());
    CHECK(back.normalization.lo == -10.0);
    CHECK(fs::equivalent(back.items[1].image, m.items[1].image));
  }

  TEST_CASE("manifest rejects duplicate ids") {
    const auto dir = scratch_dir("dup");
    std::ofstream(dir / "m.json") << R"({"items":[{"id":"a","image":"x","label":"y"},{"id":"a","image":"x","label":"y"}]})";
    CHECK_THROWS_AS(load_manifest(dir / "m.json"), Error);
  }
}
