#pragma once

// Slow, direct reference implementations used to check the library.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <random>
#include <utility>
#include <vector>

#include "proxyhpo/proxy_net.hpp"
#include "proxyhpo/trainer.hpp"
#include "proxyhpo/volume.hpp"

namespace oracle {

using proxyhpo::Shape3;
using proxyhpo::Volume3D;

inline Volume3D random_volume(std::mt19937_64& gen, Shape3 shape, double lo = -100.0,
                              double hi = 200.0) {
  std::uniform_real_distribution<double> dist(lo, hi);
  std::vector<float> v(shape.voxel_count());
  for (auto& x : v) x = static_cast<float>(dist(gen));
  return Volume3D(shape, {1.0, 1.0, 1.0}, std::move(v));
}

inline int bin_of(double v, double lo, double hi, int bins) {
  if (hi <= lo) return 0;
  const int b = static_cast<int>(std::floor((v - lo) / (hi - lo) * bins));
  return std::clamp(b, 0, bins - 1);
}

inline std::vector<int> bin_all(const Volume3D& v, int bins) {
  const auto vox = v.voxels();
  const double lo = *std::min_element(vox.begin(), vox.end());
  const double hi = *std::max_element(vox.begin(), vox.end());
  std::vector<int> out;
  for (float x : vox) out.push_back(bin_of(x, lo, hi, bins));
  return out;
}

inline double entropy(const std::map<long long, long long>& counts, double n) {
  double h = 0.0;
  for (const auto& [_, c] : counts) {
    const double p = static_cast<double>(c) / n;
    h -= p * std::log(p);
  }
  return h;
}

/// MI as H(A) + H(B) - H(A, B), natural log.
inline double mutual_information(const Volume3D& a, const Volume3D& b, int bins) {
  const auto ba = bin_all(a, bins);
  const auto bb = bin_all(b, bins);
  std::map<long long, long long> ca, cb, cab;
  for (std::size_t i = 0; i < ba.size(); ++i) {
    ++ca[ba[i]];
    ++cb[bb[i]];
    ++cab[static_cast<long long>(ba[i]) * bins + bb[i]];
  }
  const double n = static_cast<double>(ba.size());
  return entropy(ca, n) + entropy(cb, n) - entropy(cab, n);
}

inline double marginal_entropy(const Volume3D& a, int bins) {
  std::map<long long, long long> c;
  for (int b : bin_all(a, bins)) ++c[b];
  return entropy(c, static_cast<double>(a.size()));
}

/// Per-voxel local NCC with windows truncated at the boundary.
inline double local_ncc(const Volume3D& a, const Volume3D& b, int wx, int wy, int wz) {
  const auto s = a.shape();
  double total = 0.0;
  for (int z = 0; z < s.nz; ++z)
    for (int y = 0; y < s.ny; ++y)
      for (int x = 0; x < s.nx; ++x) {
        std::vector<double> va, vb;
        for (int k = z - wz / 2; k <= z + wz / 2; ++k)
          for (int j = y - wy / 2; j <= y + wy / 2; ++j)
            for (int i = x - wx / 2; i <= x + wx / 2; ++i) {
              if (i < 0 || j < 0 || k < 0 || i >= s.nx || j >= s.ny || k >= s.nz) continue;
              va.push_back(a.at(i, j, k));
              vb.push_back(b.at(i, j, k));
            }
        const double n = static_cast<double>(va.size());
        const double ma = std::accumulate(va.begin(), va.end(), 0.0) / n;
        const double mb = std::accumulate(vb.begin(), vb.end(), 0.0) / n;
        double sab = 0.0, saa = 0.0, sbb = 0.0;
        for (std::size_t i = 0; i < va.size(); ++i) {
          sab += (va[i] - ma) * (vb[i] - mb);
          saa += (va[i] - ma) * (va[i] - ma);
          sbb += (vb[i] - mb) * (vb[i] - mb);
        }
        if (saa / n < 1e-12 || sbb / n < 1e-12) continue;
        total += sab * sab / (saa * sbb);
      }
  return total / static_cast<double>(s.voxel_count());
}

/// B smallest scores, ties to the lower index, returned ascending.
inline std::vector<std::size_t> select_by_sort(const std::vector<double>& scores, std::size_t budget) {
  std::vector<std::pair<double, std::size_t>> keyed;
  for (std::size_t i = 0; i < scores.size(); ++i) keyed.emplace_back(scores[i], i);
  std::sort(keyed.begin(), keyed.end());
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < budget; ++i) out.push_back(keyed[i].second);
  std::sort(out.begin(), out.end());
  return out;
}

/// Parameter count from an explicit layer list: (kernel volume, in, out).
inline std::int64_t param_count(const proxyhpo::UNetSpec& s) {
  std::vector<std::array<std::int64_t, 3>> layers;
  auto width = [&](int level) { return static_cast<std::int64_t>(s.base_channels) * (1 << level); };
  layers.push_back({27, s.in_channels, width(0)});
  for (int l = 0; l < s.levels; ++l) {
    for (int r = 0; r < 2 * s.res_blocks; ++r) layers.push_back({27, width(l), width(l)});
    if (l + 1 < s.levels) layers.push_back({27, width(l), width(l + 1)});
  }
  for (int l = s.levels - 2; l >= 0; --l) {
    layers.push_back({8, width(l + 1), width(l)});
    layers.push_back({27, 2 * width(l), width(l)});
    for (int r = 0; r < 2 * s.res_blocks; ++r) layers.push_back({27, width(l), width(l)});
  }
  layers.push_back({1, width(0), s.out_channels});
  std::int64_t total = 0;
  for (const auto& [k, in, out] : layers) total += k * in * out + out;
  return total;
}

struct SurrogatePeak {
  double amplitude;
  double mu;
};

inline SurrogatePeak surrogate_peak(proxyhpo::Optimizer opt) {
  switch (opt) {
    case proxyhpo::Optimizer::kAdam: return {0.95, 4e-4};
    case proxyhpo::Optimizer::kAdamax: return {0.94, 6e-4};
    case proxyhpo::Optimizer::kRmsprop: return {0.92, 1e-4};
    case proxyhpo::Optimizer::kNovograd: return {0.90, 1e-3};
  }
  return {0.0, 1.0};
}

/// Noise-free surrogate Dice, written out term by term.
inline double surrogate_dice(proxyhpo::Optimizer opt, double lr, double p, double n_train,
                             double capacity) {
  const auto [amp, mu] = surrogate_peak(opt);
  const double sigma = std::log(10.0) / 2.0;
  const double d = std::log(lr) - std::log(mu);
  const double value = amp * std::exp(-d * d / (2 * sigma * sigma)) * (n_train / (n_train + 3)) *
                       (capacity / (capacity + 0.05)) * (1 - 0.15 * (p - 0.4) * (p - 0.4));
  return std::clamp(value, 0.0, 1.0);
}

inline double pearson(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  return sxy / std::sqrt(sxx * syy);
}

}  // namespace oracle
