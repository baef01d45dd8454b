#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "proxyhpo/preprocess.hpp"
#include "proxyhpo/volume.hpp"
#include "proxyhpo/volume_io.hpp"

namespace proxyhpo {

enum class MeasureKind { kMutualInformation, kLocalNcc };
enum class RoiMode { kWholeVolume, kLabelCrop };

std::string_view to_string(MeasureKind kind);
MeasureKind parse_measure_kind(std::string_view text);
std::string_view to_string(RoiMode mode);

struct Window3 {
  int x = 9;
  int y = 9;
  int z = 9;
};

struct MeasureConfig {
  MeasureKind kind = MeasureKind::kMutualInformation;
  RoiMode roi_mode = RoiMode::kWholeVolume;
  int mi_bins = 32;
  double mi_log_base = 2.718281828459045;
  Window3 ncc_window{};
  int canonical_cube = kDefaultCubeSize;

  void validate() const;
};

/// Shannon entropy of one volume under the equal-width binning used by MI.
double marginal_entropy(const Volume3D& volume, int bins, double log_base = 2.718281828459045);

/// Histogram mutual information. Each axis is binned over its own volume's
/// [min, max]; a constant volume puts all mass in bin 0. The sum is taken in
/// a canonical order so that swapping the arguments gives a bitwise equal result.
double mutual_information(const Volume3D& a, const Volume3D& b, int bins,
                          double log_base = 2.718281828459045);

/// Mean over voxels of the squared windowed correlation between a and b.
/// Windows are truncated at the volume boundary; windows in which either
/// volume has variance below 1e-12 contribute 0.
double local_ncc(const Volume3D& a, const Volume3D& b, Window3 window);

double measure(const Volume3D& a, const Volume3D& b, const MeasureConfig& config);

/// Normalizes with the manifest window, then either label-crops or resamples
/// the whole volume onto the canonical cube.
Volume3D prepare_for_measure(const Volume3D& image, const LabelMask* label,
                             const IntensityWindow& window, const MeasureConfig& config);
Volume3D prepare_item(const ManifestItem& item, const IntensityWindow& window,
                      const MeasureConfig& config);

class PairwiseMatrix {
 public:
  PairwiseMatrix() = default;
  explicit PairwiseMatrix(std::size_t n) : n_(n), values_(n * n, 0.0) {}

  std::size_t size() const { return n_; }
  double at(std::size_t i, std::size_t j) const { return values_[i * n_ + j]; }
  /// Writes both (i, j) and (j, i).
  void set_symmetric(std::size_t i, std::size_t j, double value) {
    values_[i * n_ + j] = value;
    values_[j * n_ + i] = value;
  }
  const std::vector<double>& values() const { return values_; }

  friend bool operator==(const PairwiseMatrix&, const PairwiseMatrix&) = default;

 private:
  std::size_t n_ = 0;
  std::vector<double> values_;
};

/// Every unordered pair (including i == j) is measured once and mirrored.
PairwiseMatrix pairwise_matrix(const std::vector<Volume3D>& prepared,
                               const MeasureConfig& config, int workers = 1);
PairwiseMatrix pairwise_matrix(const DatasetManifest& manifest, const MeasureConfig& config,
                               int workers = 1);

/// score_i = mean_j values[i][j], self pair included.
std::vector<double> importance_scores(const PairwiseMatrix& matrix);

/// Indices of the `budget` lowest scores, ties to the lower index, ascending.
std::vector<std::size_t> select_proxy(const std::vector<double>& scores, std::size_t budget);

/// Uniform sample without replacement, ascending.
std::vector<std::size_t> select_random(std::size_t n, std::size_t budget, std::uint64_t seed);

struct DataSplit {
  std::vector<std::size_t> train;
  std::vector<std::size_t> val;
};

/// Seeded shuffle, then the first ceil(k/2) go to train. Both halves are
/// returned in ascending order.
DataSplit split_fifty_fifty(const std::vector<std::size_t>& indices, std::uint64_t seed);

std::string matrix_to_csv(const PairwiseMatrix& matrix, const std::vector<std::string>& ids);
std::string scores_to_csv(const std::vector<double>& scores, const std::vector<std::string>& ids);

struct ScoreTable {
  std::vector<std::string> ids;
  std::vector<double> scores;
};

/// Reads "id,score" rows (with header) as written by scores_to_csv.
ScoreTable parse_scores_csv(std::string_view text);

}  // namespace proxyhpo
