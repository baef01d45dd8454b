#include "proxyhpo/measures.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <sstream>

#include "proxyhpo/error.hpp"
#include "proxyhpo/parallel.hpp"
#include "proxyhpo/random.hpp"

namespace proxyhpo {
namespace {

constexpr double kDegenerateVariance = 1e-12;

std::vector<int> bin_indices(const Volume3D& volume, int bins) {
  auto voxels = volume.voxels();
  const auto [lo_it, hi_it] = std::minmax_element(voxels.begin(), voxels.end());
  const double lo = *lo_it;
  const double range = static_cast<double>(*hi_it) - lo;
  std::vector<int> out(voxels.size(), 0);
  if (range <= 0.0) return out;
  for (std::size_t i = 0; i < voxels.size(); ++i) {
    const double t = (static_cast<double>(voxels[i]) - lo) / range;
    out[i] = std::min(bins - 1, static_cast<int>(t * bins));
  }
  return out;
}

void check_bins(int bins) {
  if (bins < 2) throw Error(ErrorCode::kInvalidInput, "MI needs at least 2 bins");
}

void check_window(Window3 w) {
  for (int extent : {w.x, w.y, w.z}) {
    if (extent < 3 || extent % 2 == 0) {
      throw Error(ErrorCode::kInvalidInput, "NCC window extents must be odd and >= 3");
    }
  }
}

double sum_sorted(std::vector<double>& terms) {
  std::sort(terms.begin(), terms.end());
  double total = 0.0;
  for (double t : terms) total += t;
  return total;
}

// Truncated box sum along one axis of a field laid out x-fastest.
void box_sum_axis(const std::vector<double>& in, std::vector<double>& out, Shape3 shape, int axis,
                  int radius) {
  const int n = shape[axis];
  const std::size_t stride =
      axis == 0 ? 1
                : (axis == 1 ? static_cast<std::size_t>(shape.nx)
                             : static_cast<std::size_t>(shape.nx) * shape.ny);
  const std::size_t total = shape.voxel_count();
  for (std::size_t base = 0; base < total; ++base) {
    const int coord = static_cast<int>((base / stride) % static_cast<std::size_t>(n));
    const int lo = std::max(0, coord - radius);
    const int hi = std::min(n - 1, coord + radius);
    const std::size_t origin = base - static_cast<std::size_t>(coord) * stride;
    double acc = 0.0;
    for (int k = lo; k <= hi; ++k) acc += in[origin + static_cast<std::size_t>(k) * stride];
    out[base] = acc;
  }
}

std::vector<double> box_sum(std::vector<double> field, Shape3 shape, Window3 window) {
  std::vector<double> scratch(field.size());
  box_sum_axis(field, scratch, shape, 0, window.x / 2);
  box_sum_axis(scratch, field, shape, 1, window.y / 2);
  box_sum_axis(field, scratch, shape, 2, window.z / 2);
  return scratch;
}

// Two-pass evaluation of one voxel's contribution; used where the one-pass
// moment formula would lose precision to cancellation.
double exact_contribution(const std::vector<double>& a, const std::vector<double>& b, Shape3 s,
                          Window3 w, int x, int y, int z) {
  const int x0 = std::max(0, x - w.x / 2), x1 = std::min(s.nx - 1, x + w.x / 2);
  const int y0 = std::max(0, y - w.y / 2), y1 = std::min(s.ny - 1, y + w.y / 2);
  const int z0 = std::max(0, z - w.z / 2), z1 = std::min(s.nz - 1, z + w.z / 2);
  auto idx = [&](int xi, int yi, int zi) {
    return static_cast<std::size_t>(xi) +
           static_cast<std::size_t>(s.nx) * (static_cast<std::size_t>(yi) +
                                             static_cast<std::size_t>(s.ny) * zi);
  };
  double sa = 0.0, sb = 0.0;
  for (int zi = z0; zi <= z1; ++zi)
    for (int yi = y0; yi <= y1; ++yi)
      for (int xi = x0; xi <= x1; ++xi) {
        sa += a[idx(xi, yi, zi)];
        sb += b[idx(xi, yi, zi)];
      }
  const double count = static_cast<double>((x1 - x0 + 1) * (y1 - y0 + 1) * (z1 - z0 + 1));
  const double ma = sa / count, mb = sb / count;
  double cross = 0.0, va = 0.0, vb = 0.0;
  for (int zi = z0; zi <= z1; ++zi)
    for (int yi = y0; yi <= y1; ++yi)
      for (int xi = x0; xi <= x1; ++xi) {
        const double da = a[idx(xi, yi, zi)] - ma;
        const double db = b[idx(xi, yi, zi)] - mb;
        cross += da * db;
        va += da * da;
        vb += db * db;
      }
  if (va / count < kDegenerateVariance || vb / count < kDegenerateVariance) return 0.0;
  return (cross * cross) / (va * vb);
}

std::vector<double> centered(const Volume3D& v) {
  auto voxels = v.voxels();
  double mean = 0.0;
  for (float x : voxels) mean += x;
  mean /= static_cast<double>(voxels.size());
  std::vector<double> out(voxels.size());
  for (std::size_t i = 0; i < voxels.size(); ++i) out[i] = voxels[i] - mean;
  return out;
}

}  // namespace

std::string_view to_string(MeasureKind kind) {
  return kind == MeasureKind::kMutualInformation ? "mi" : "ncc";
}

MeasureKind parse_measure_kind(std::string_view text) {
  if (text == "mi") return MeasureKind::kMutualInformation;
  if (text == "ncc") return MeasureKind::kLocalNcc;
  throw Error(ErrorCode::kInvalidInput, "unknown measure '" + std::string(text) + "'");
}

std::string_view to_string(RoiMode mode) {
  return mode == RoiMode::kLabelCrop ? "labelcrop" : "whole-volume";
}

void MeasureConfig::validate() const {
  check_bins(mi_bins);
  check_window(ncc_window);
  if (canonical_cube < 1) throw Error(ErrorCode::kInvalidInput, "canonical cube must be >= 1");
  if (!(mi_log_base > 0.0) || mi_log_base == 1.0) {
    throw Error(ErrorCode::kInvalidInput, "log base must be positive and not 1");
  }
}

double marginal_entropy(const Volume3D& volume, int bins, double log_base) {
  check_bins(bins);
  const auto idx = bin_indices(volume, bins);
  std::vector<std::int64_t> counts(static_cast<std::size_t>(bins), 0);
  for (int b : idx) ++counts[static_cast<std::size_t>(b)];
  const double n = static_cast<double>(idx.size());
  std::vector<double> terms;
  for (auto c : counts) {
    if (c == 0) continue;
    const double p = static_cast<double>(c) / n;
    terms.push_back(-p * std::log(p));
  }
  return sum_sorted(terms) / std::log(log_base);
}

double mutual_information(const Volume3D& a, const Volume3D& b, int bins, double log_base) {
  check_bins(bins);
  if (a.size() != b.size()) {
    throw Error(ErrorCode::kGeometry, "MI requires equal voxel counts");
  }
  const auto ia = bin_indices(a, bins);
  const auto ib = bin_indices(b, bins);
  const auto nb = static_cast<std::size_t>(bins);
  std::vector<std::int64_t> joint(nb * nb, 0), ma(nb, 0), mb(nb, 0);
  for (std::size_t k = 0; k < ia.size(); ++k) {
    const auto i = static_cast<std::size_t>(ia[k]);
    const auto j = static_cast<std::size_t>(ib[k]);
    ++joint[i * nb + j];
    ++ma[i];
    ++mb[j];
  }
  const double n = static_cast<double>(ia.size());
  std::vector<double> terms;
  for (std::size_t i = 0; i < nb; ++i) {
    for (std::size_t j = 0; j < nb; ++j) {
      const auto c = joint[i * nb + j];
      if (c == 0) continue;
      const double pij = static_cast<double>(c) / n;
      const double pi = static_cast<double>(ma[i]) / n;
      const double pj = static_cast<double>(mb[j]) / n;
      terms.push_back(pij * std::log(pij / (pi * pj)));
    }
  }
  return sum_sorted(terms) / std::log(log_base);
}

double local_ncc(const Volume3D& a, const Volume3D& b, Window3 window) {
  check_window(window);
  if (a.shape() != b.shape()) throw Error(ErrorCode::kGeometry, "NCC requires equal shapes");
  const Shape3 s = a.shape();
  const auto ca = centered(a);
  const auto cb = centered(b);
  const std::size_t n = ca.size();

  std::vector<double> aa(n), bb(n), ab(n);
  for (std::size_t i = 0; i < n; ++i) {
    aa[i] = ca[i] * ca[i];
    bb[i] = cb[i] * cb[i];
    ab[i] = ca[i] * cb[i];
  }
  const auto sa = box_sum(ca, s, window);
  const auto sb = box_sum(cb, s, window);
  const auto saa = box_sum(std::move(aa), s, window);
  const auto sbb = box_sum(std::move(bb), s, window);
  const auto sab = box_sum(std::move(ab), s, window);

  auto axis_count = [](int c, int n_axis, int r) {
    return std::min(n_axis - 1, c + r) - std::max(0, c - r) + 1;
  };
  // A window is trusted to the one-pass formula only when its centered sum
  // of squares keeps at least this fraction of the raw sum of squares.
  constexpr double kCancellationGuard = 1e-4;

  double total = 0.0;
  std::size_t k = 0;
  for (int z = 0; z < s.nz; ++z) {
    const int cz = axis_count(z, s.nz, window.z / 2);
    for (int y = 0; y < s.ny; ++y) {
      const int cy = axis_count(y, s.ny, window.y / 2);
      for (int x = 0; x < s.nx; ++x, ++k) {
        const double count = static_cast<double>(axis_count(x, s.nx, window.x / 2) * cy * cz);
        const double va = saa[k] - sa[k] * sa[k] / count;
        const double vb = sbb[k] - sb[k] * sb[k] / count;
        if (va <= kCancellationGuard * saa[k] || vb <= kCancellationGuard * sbb[k]) {
          total += exact_contribution(ca, cb, s, window, x, y, z);
          continue;
        }
        if (va / count < kDegenerateVariance || vb / count < kDegenerateVariance) continue;
        const double cross = sab[k] - sa[k] * sb[k] / count;
        total += (cross * cross) / (va * vb);
      }
    }
  }
  return total / static_cast<double>(n);
}

double measure(const Volume3D& a, const Volume3D& b, const MeasureConfig& config) {
  if (config.kind == MeasureKind::kMutualInformation) {
    return mutual_information(a, b, config.mi_bins, config.mi_log_base);
  }
  return local_ncc(a, b, config.ncc_window);
}

Volume3D prepare_for_measure(const Volume3D& image, const LabelMask* label,
                             const IntensityWindow& window, const MeasureConfig& config) {
  const auto normalized = intensity_window_normalize(image, window.lo, window.hi);
  if (config.roi_mode == RoiMode::kLabelCrop) {
    if (label == nullptr) throw Error(ErrorCode::kInvalidInput, "labelcrop needs a label");
    return labelcrop(normalized, *label, config.canonical_cube);
  }
  const int c = config.canonical_cube;
  return resample_trilinear(normalized, {c, c, c});
}

Volume3D prepare_item(const ManifestItem& item, const IntensityWindow& window,
                      const MeasureConfig& config) {
  try {
    const auto image = load_volume(item.image);
    if (config.roi_mode == RoiMode::kLabelCrop) {
      const LabelMask label(load_volume(item.label));
      return prepare_for_measure(image, &label, window, config);
    }
    return prepare_for_measure(image, nullptr, window, config);
  } catch (const Error& e) {
    throw Error(e.code(), "item '" + item.id + "': " + e.what());
  }
}

PairwiseMatrix pairwise_matrix(const std::vector<Volume3D>& prepared,
                               const MeasureConfig& config, int workers) {
  config.validate();
  const std::size_t n = prepared.size();
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  pairs.reserve(n * (n + 1) / 2);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i; j < n; ++j) pairs.emplace_back(i, j);

  PairwiseMatrix matrix(n);
  std::vector<double> values(pairs.size());
  parallel_for(pairs.size(), workers, [&](std::size_t p) {
    values[p] = measure(prepared[pairs[p].first], prepared[pairs[p].second], config);
  });
  for (std::size_t p = 0; p < pairs.size(); ++p) {
    matrix.set_symmetric(pairs[p].first, pairs[p].second, values[p]);
  }
  return matrix;
}

PairwiseMatrix pairwise_matrix(const DatasetManifest& manifest, const MeasureConfig& config,
                               int workers) {
  config.validate();
  std::vector<Volume3D> prepared(manifest.items.size());
  parallel_for(prepared.size(), workers, [&](std::size_t i) {
    prepared[i] = prepare_item(manifest.items[i], manifest.normalization, config);
  });
  return pairwise_matrix(prepared, config, workers);
}

std::vector<double> importance_scores(const PairwiseMatrix& matrix) {
  const std::size_t n = matrix.size();
  std::vector<double> scores(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    double row = 0.0;
    for (std::size_t j = 0; j < n; ++j) row += matrix.at(i, j);
    scores[i] = row / static_cast<double>(n);
  }
  return scores;
}

std::vector<std::size_t> select_proxy(const std::vector<double>& scores, std::size_t budget) {
  if (budget < 1 || budget > scores.size()) {
    throw Error(ErrorCode::kBudget, "budget " + std::to_string(budget) + " outside [1, " +
                                        std::to_string(scores.size()) + "]");
  }
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t l, std::size_t r) { return scores[l] < scores[r]; });
  order.resize(budget);
  std::sort(order.begin(), order.end());
  return order;
}

std::vector<std::size_t> select_random(std::size_t n, std::size_t budget, std::uint64_t seed) {
  if (budget < 1 || budget > n) {
    throw Error(ErrorCode::kBudget, "budget " + std::to_string(budget) + " outside [1, " +
                                        std::to_string(n) + "]");
  }
  std::vector<std::size_t> pool(n);
  std::iota(pool.begin(), pool.end(), 0);
  Rng rng(seed);
  for (std::size_t i = 0; i < budget; ++i) {
    const std::size_t j = i + rng.below(n - i);
    std::swap(pool[i], pool[j]);
  }
  pool.resize(budget);
  std::sort(pool.begin(), pool.end());
  return pool;
}

DataSplit split_fifty_fifty(const std::vector<std::size_t>& indices, std::uint64_t seed) {
  if (indices.size() < 2) throw Error(ErrorCode::kSplit, "need at least 2 items to split");
  std::vector<std::size_t> shuffled = indices;
  Rng rng(seed);
  for (std::size_t i = shuffled.size() - 1; i > 0; --i) {
    std::swap(shuffled[i], shuffled[rng.below(i + 1)]);
  }
  const std::size_t n_train = (shuffled.size() + 1) / 2;
  DataSplit split;
  split.train.assign(shuffled.begin(), shuffled.begin() + static_cast<std::ptrdiff_t>(n_train));
  split.val.assign(shuffled.begin() + static_cast<std::ptrdiff_t>(n_train), shuffled.end());
  std::sort(split.train.begin(), split.train.end());
  std::sort(split.val.begin(), split.val.end());
  return split;
}

namespace {

std::string format_real(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

std::string matrix_to_csv(const PairwiseMatrix& matrix, const std::vector<std::string>& ids) {
  if (ids.size() != matrix.size()) throw Error(ErrorCode::kInvalidInput, "id count mismatch");
  std::ostringstream out;
  out << "id";
  for (const auto& id : ids) out << ',' << id;
  out << '\n';
  for (std::size_t i = 0; i < matrix.size(); ++i) {
    out << ids[i];
    for (std::size_t j = 0; j < matrix.size(); ++j) out << ',' << format_real(matrix.at(i, j));
    out << '\n';
  }
  return out.str();
}

std::string scores_to_csv(const std::vector<double>& scores, const std::vector<std::string>& ids) {
  if (ids.size() != scores.size()) throw Error(ErrorCode::kInvalidInput, "id count mismatch");
  std::ostringstream out;
  out << "id,score\n";
  for (std::size_t i = 0; i < scores.size(); ++i) out << ids[i] << ',' << format_real(scores[i]) << '\n';
  return out.str();
}

ScoreTable parse_scores_csv(std::string_view text) {
  ScoreTable table;
  std::istringstream in{std::string(text)};
  std::string line;
  bool header = true;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (header) {
      header = false;
      if (line.rfind("id,", 0) == 0) continue;
    }
    const auto comma = line.find(',');
    if (comma == std::string::npos) throw Error(ErrorCode::kInvalidInput, "bad score row: " + line);
    table.ids.push_back(line.substr(0, comma));
    try {
      std::size_t used = 0;
      const auto field = line.substr(comma + 1);
      table.scores.push_back(std::stod(field, &used));
      if (used != field.size()) throw std::invalid_argument(field);
    } catch (const std::exception&) {
      throw Error(ErrorCode::kInvalidInput, "bad score value: " + line);
    }
  }
  return table;
}

}  // namespace proxyhpo
