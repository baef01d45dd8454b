#include <doctest.h>

#include <filesystem>

#include "proxyhpo/error.hpp"
#include "proxyhpo/measures.hpp"
#include "proxyhpo/synth.hpp"
#include "proxyhpo/volume_io.hpp"

using namespace proxyhpo;

TEST_SUITE("synth") {
  TEST_CASE("default layout: one big family and two singletons") {
    const auto fam = default_families(12);
    REQUIRE(fam.size() == 3);
    CHECK(fam[0].count == 10);
    CHECK(fam[1].count == 1);
    CHECK(fam[2].count == 1);
    CHECK(default_families(2).size() == 1);
  }

  TEST_CASE("generation is deterministic and independent of worker count") {
    SynthConfig cfg;
    cfg.shape = {16, 16, 16};
    cfg.seed = 5;
    const auto a = generate_items(cfg, 1);
    const auto b = generate_items(cfg, 6);
    REQUIRE(a.size() == 12);
    for (std::size_t i = 0; i < a.size(); ++i) {
      CHECK(a[i].id == b[i].id);
      CHECK(a[i].image == b[i].image);
      CHECK(a[i].label == b[i].label);
    }
    CHECK(a[0].id == "case_000");
    cfg.seed = 6;
    CHECK(generate_items(cfg, 1)[0].image != a[0].image);
  }

  TEST_CASE("labels match the ellipsoid") {
    SynthConfig cfg;
    cfg.shape = {16, 16, 16};
    cfg.n_items = 3;
    cfg.families = default_families(3);
    for (const auto& item : generate_items(cfg)) {
      std::size_t inside = 0;
      for (int z = 0; z < 16; ++z)
        for (int y = 0; y < 16; ++y)
          for (int x = 0; x < 16; ++x) {
            const bool in = item.organ.contains(x, y, z);
            CHECK((item.label.at(x, y, z) != 0.0f) == in);
            inside += in;
          }
      CHECK(inside > 0);
    }
  }

  TEST_CASE("dataset on disk loads back through the manifest") {
    const auto dir = std::filesystem::temp_directory_path() / "proxyhpo_test_synth";
    std::filesystem::remove_all(dir);
    SynthConfig cfg;
    cfg.shape = {8, 8, 8};
    cfg.n_items = 4;
    cfg.families = default_families(4);
    const auto m = gen_synthetic_dataset(cfg, dir);
    const auto back = load_manifest(dir / "manifest.json");
    CHECK(back.ids() == m.ids());
    CHECK(back.normalization.lo == -57.0);
    CHECK(back.normalization.hi == 164.0);
    const auto items = generate_items(cfg);
    CHECK(load_volume(back.items[2].image) == items[2].image);
  }

  TEST_CASE("config validation") {
    SynthConfig cfg;
    cfg.families = {{5, 0}};
    CHECK_THROWS_AS(cfg.validate(), Error);
    SynthConfig small;
    small.shape = {4, 8, 8};
    CHECK_THROWS_AS(small.validate(), Error);
  }
}
