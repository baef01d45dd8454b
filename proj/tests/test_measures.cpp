#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <random>

#include "oracles.hpp"
#include "proxyhpo/error.hpp"
#include "proxyhpo/measures.hpp"
#include "proxyhpo/synth.hpp"

using namespace proxyhpo;

namespace {

Volume3D from_values(Shape3 s, std::vector<float> v) { return Volume3D(s, {}, std::move(v)); }

Volume3D affine(const Volume3D& v, double a, double c) {
  Volume3D out = v;
  for (auto& x : out.mutable_voxels()) x = static_cast<float>(a * x + c);
  return out;
}

}  // namespace

TEST_SUITE("measures") {
  TEST_CASE("MI hand examples") {
    const auto a = from_values({2, 2, 2}, {0, 0, 0, 0, 1, 1, 1, 1});
    const auto b = from_values({2, 2, 2}, {0, 1, 0, 1, 0, 1, 0, 1});
    CHECK(mutual_information(a, b, 2) == doctest::Approx(0.0).epsilon(1e-15));
    CHECK(mutual_information(a, a, 2) == doctest::Approx(std::log(2.0)).epsilon(1e-15));
    const auto constant = from_values({2, 2, 2}, std::vector<float>(8, 3.0f));
    CHECK(mutual_information(constant, b, 2) == 0.0);
    CHECK(mutual_information(a, b, 2, 2.0) == doctest::Approx(0.0));
    CHECK(mutual_information(a, a, 2, 2.0) == doctest::Approx(1.0));
  }

  TEST_CASE("MI matches the entropy-form oracle on random pairs") {
    std::mt19937_64 gen(7);
    for (int t = 0; t < 40; ++t) {
      const auto a = oracle::random_volume(gen, {6, 5, 4});
      // partly dependent b so MI is not trivially small
      auto b = oracle::random_volume(gen, {6, 5, 4});
      for (std::size_t i = 0; i < b.size(); i += 2) b.mutable_voxels()[i] = a.voxels()[i];
      for (int bins : {2, 8, 32}) {
        CHECK(std::abs(mutual_information(a, b, bins) - oracle::mutual_information(a, b, bins)) < 1e-9);
      }
      CHECK(std::abs(mutual_information(a, a, 8) - marginal_entropy(a, 8)) < 1e-9);
      CHECK(std::abs(marginal_entropy(a, 8) - oracle::marginal_entropy(a, 8)) < 1e-9);
    }
  }

  TEST_CASE("MI properties: symmetry, non-negativity, monotone remap") {
    std::mt19937_64 gen(8);
    for (int t = 0; t < 30; ++t) {
      const auto a = oracle::random_volume(gen, {5, 5, 5});
      const auto b = oracle::random_volume(gen, {5, 5, 5});
      const double ab = mutual_information(a, b, 16);
      CHECK(ab == mutual_information(b, a, 16));
      CHECK(ab >= -1e-12);
      CHECK(mutual_information(affine(a, 3.0, 7.0), affine(b, 3.0, 7.0), 16) ==
            doctest::Approx(ab).epsilon(1e-6));
    }
  }

  TEST_CASE("MI rejects bad inputs") {
    const Volume3D a({2, 2, 2}, {}), b({2, 2, 3}, {});
    CHECK_THROWS_AS(mutual_information(a, b, 8), Error);
    CHECK_THROWS_AS(mutual_information(a, a, 1), Error);
  }

  TEST_CASE("NCC matches the per-voxel oracle including boundaries") {
    std::mt19937_64 gen(9);
    for (int t = 0; t < 12; ++t) {
      const auto a = oracle::random_volume(gen, {7, 6, 5});
      auto b = oracle::random_volume(gen, {7, 6, 5});
      for (std::size_t i = 0; i < b.size(); i += 3) b.mutable_voxels()[i] = 2 * a.voxels()[i];
      for (Window3 w : {Window3{3, 3, 3}, Window3{5, 3, 7}, Window3{9, 9, 9}}) {
        CHECK(std::abs(local_ncc(a, b, w) - oracle::local_ncc(a, b, w.x, w.y, w.z)) < 1e-9);
      }
    }
  }

  TEST_CASE("NCC degenerate windows contribute zero") {
    // constant left half: windows that see only the constant part drop out
    Volume3D a({8, 3, 3}, {});
    std::mt19937_64 gen(2);
    std::uniform_real_distribution<double> d(0, 1);
    for (int z = 0; z < 3; ++z)
      for (int y = 0; y < 3; ++y)
        for (int x = 4; x < 8; ++x) a.at(x, y, z) = static_cast<float>(d(gen));
    const double got = local_ncc(a, a, {3, 3, 3});
    CHECK(got == doctest::Approx(oracle::local_ncc(a, a, 3, 3, 3)).epsilon(1e-12));
    CHECK(got < 1.0);
    const Volume3D flat({4, 4, 4}, {}, 5.0f);
    CHECK(local_ncc(flat, flat, {3, 3, 3}) == 0.0);
  }

  TEST_CASE("NCC large-offset data falls back to exact evaluation") {
    std::mt19937_64 gen(10);
    auto a = oracle::random_volume(gen, {6, 6, 6}, 1e6, 1e6 + 1e-2);
    auto b = oracle::random_volume(gen, {6, 6, 6}, -3, 3);
    CHECK(std::abs(local_ncc(a, b, {3, 3, 3}) - oracle::local_ncc(a, b, 3, 3, 3)) < 1e-9);
  }

  TEST_CASE("NCC properties") {
    std::mt19937_64 gen(11);
    for (int t = 0; t < 10; ++t) {
      const auto a = oracle::random_volume(gen, {6, 6, 6});
      const auto b = oracle::random_volume(gen, {6, 6, 6});
      const double ab = local_ncc(a, b, {3, 3, 3});
      CHECK(ab >= 0.0);
      CHECK(ab <= 1.0);
      CHECK(ab == doctest::Approx(local_ncc(b, a, {3, 3, 3})).epsilon(1e-12));
      CHECK(local_ncc(a, a, {3, 3, 3}) == doctest::Approx(1.0).epsilon(1e-12));
      CHECK(std::abs(local_ncc(a, affine(a, -2.5, 4.0), {3, 3, 3}) - 1.0) < 1e-9);
    }
    const Volume3D a({3, 3, 3}, {});
    CHECK_THROWS_AS(local_ncc(a, a, {4, 3, 3}), Error);
    CHECK_THROWS_AS(local_ncc(a, a, {1, 1, 1}), Error);
  }

  TEST_CASE("pairwise matrix entries equal single-pair measures and ignore scheduling") {
    const auto dir = std::filesystem::temp_directory_path() / "proxyhpo_test_pairwise";
    std::filesystem::remove_all(dir);
    SynthConfig cfg;
    cfg.n_items = 5;
    cfg.shape = {16, 16, 16};
    cfg.families = default_families(5);
    cfg.seed = 3;
    const auto manifest = gen_synthetic_dataset(cfg, dir);
    for (auto kind : {MeasureKind::kMutualInformation, MeasureKind::kLocalNcc}) {
      MeasureConfig mc;
      mc.kind = kind;
      mc.canonical_cube = 12;
      mc.ncc_window = {3, 3, 3};
      const auto serial = pairwise_matrix(manifest, mc, 1);
      const auto parallel = pairwise_matrix(manifest, mc, 8);
      CHECK(serial == parallel);
      for (std::size_t i = 0; i < 5; ++i) {
        const auto pi = prepare_item(manifest.items[i], manifest.normalization, mc);
        for (std::size_t j = 0; j < 5; ++j) {
          const auto pj = prepare_item(manifest.items[j], manifest.normalization, mc);
          CHECK(serial.at(i, j) == measure(pi, pj, mc));
          CHECK(serial.at(i, j) == serial.at(j, i));
        }
      }
    }
  }

  TEST_CASE("measure kind parsing") {
    CHECK(parse_measure_kind("mi") == MeasureKind::kMutualInformation);
    CHECK(parse_measure_kind("ncc") == MeasureKind::kLocalNcc);
    CHECK_THROWS_AS(parse_measure_kind("ssd"), Error);
  }
}
