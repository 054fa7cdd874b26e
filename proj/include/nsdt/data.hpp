#pragma once

#include "nsdt/common.hpp"

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace nsdt {

enum class FeatureKind { numerical, categorical };

struct FeatureSpec {
  std::string name;
  FeatureKind kind = FeatureKind::numerical;
  int bin_count = 0;                  // numerical: h_i after discretization
  std::vector<std::string> levels;    // categorical: ordered, duplicate-free
  bool degenerate = false;            // constant column, excluded from modeling

  int cardinality() const {
    return kind == FeatureKind::numerical ? bin_count : static_cast<int>(levels.size());
  }
  int level_index(const std::string& level) const;
};

// Quantile (or equal-width) cut points for one numerical feature. The mapping
// is total: below the first edge -> bin 0, at or above the last -> last bin.
struct BinMapping {
  int feature = -1;
  std::vector<double> edges;  // strictly increasing, bin_count-1 entries

  int bin_count() const { return static_cast<int>(edges.size()) + 1; }
  int bin_of(double x) const;
};

// Cleaned, typed, pre-discretization table.
struct Column {
  std::string name;
  FeatureKind kind = FeatureKind::numerical;
  Vector values;                    // numerical rows
  std::vector<std::string> labels;  // categorical rows
};

struct DataTable {
  std::vector<Column> columns;
  Vector target;                         // binary 0/1, or raw continuous pre-binarize
  std::vector<std::uint8_t> predefined;  // empty, or per row: 0 train / 2 test

  Index rows() const { return target.size(); }
};

struct CleanReport {
  std::string dataset_id;
  std::size_t rows_before = 0;
  std::size_t rows_after = 0;
  std::size_t dropped_missing = 0;
  std::size_t dropped_duplicates = 0;
  std::size_t dropped_conflicts = 0;
};

struct NoiseConfig {
  double feature_fraction = 0.3;
  double input_fraction = 0.5;
  double std_fraction = 0.15;
  std::uint64_t seed = 0;
};

struct NoisedFeature {
  std::string name;
  FeatureKind kind = FeatureKind::numerical;
  double noise_mean = 0.0;   // numerical: column max
  double noise_std = 0.0;    // numerical: std_fraction * column max
  Index corrupted_entries = 0;
};

struct NoiseReport {
  NoiseConfig config;
  std::vector<NoisedFeature> features;
};

struct AssociationRecord {
  std::string name;
  FeatureKind kind = FeatureKind::numerical;
  double before = 0.0;
  double after = 0.0;
  double relative_drop = 0.0;  // (|before| - |after|) / |before|
  bool excluded = false;       // association undefined (constant feature)
};

enum SplitTag : std::uint8_t { kTrain = 0, kValid = 1, kTest = 2 };

struct EncodedDataset {
  std::string dataset_id;
  std::uint64_t seed = 0;
  std::vector<FeatureSpec> features;
  std::vector<BinMapping> bins;  // parallel to features; empty edges for categorical
  IntMatrix codes;               // rows x features
  IntVector target;              // 0/1
  std::vector<std::uint8_t> split;

  Index rows() const { return codes.rows(); }
  Index feature_count() const { return codes.cols(); }
  std::vector<Index> rows_with(SplitTag tag) const;
};

// ---- dataset schemas (published file formats) ----

struct ColumnDef {
  enum Role { kNum, kCat, kTarget, kIgnore };
  std::string name;
  Role role = kNum;
};

struct DatasetSchema {
  std::string id;
  bool has_header = true;
  char delimiter = ',';
  std::vector<std::string> na_markers;
  std::vector<ColumnDef> columns;  // file order (headerless) / name-matched (header)
  std::vector<std::string> train_files;
  std::vector<std::string> test_files;  // non-empty => predefined train/test split
  bool continuous_target = false;       // insurance: binarized downstream
  std::vector<std::string> positive_values;
  bool drop_conflicts = false;  // census: same features, different labels
  std::vector<std::string> source_urls;
};

const DatasetSchema& dataset_schema(const std::string& dataset_id);
std::vector<std::string> known_dataset_ids();

// ---- operations ----

// Parse the dataset's published files from data_dir/<id>/, drop rows with
// missing cells, exact duplicates, and (census) label conflicts.
DataTable load_and_clean(const std::string& data_dir, const std::string& dataset_id,
                         CleanReport* report = nullptr);

// Top decile -> 1. Threshold is the nearest-rank 90th percentile,
// sorted[ceil(0.9*n)] with 0-based indexing; values >= threshold map to 1.
IntVector binarize_top_decile(const Vector& targets);

// Quantile edges fit on the training split only; duplicate quantiles merged.
// Throws on a constant column (fewer than 2 distinct values).
BinMapping fit_discretizer(const Vector& train_column, int bin_count, int feature_index,
                           bool equal_width = false);

// Disjoint, exhaustive tags, deterministic under seed. With a predefined
// train/test split, test rows are untouched and 10% of train becomes valid.
std::vector<std::uint8_t> split_rows(Index n, const std::array<double, 3>& ratios,
                                     std::uint64_t seed,
                                     const std::vector<std::uint8_t>& predefined = {});

struct EncodeConfig {
  int bin_count = 21;
  bool equal_width = false;
  std::array<double, 3> ratios{0.7, 0.1, 0.2};
  std::uint64_t seed = 0;
};

// split -> fit discretizers on train rows -> integer codes.
// table.target must already be binary.
EncodedDataset encode_dataset(const DataTable& table, const std::string& dataset_id,
                              const EncodeConfig& config);

// Stratified row cap applied before splitting; deterministic under seed.
DataTable subsample_stratified(const DataTable& table, Index cap, std::uint64_t seed);

// Corrupt ceil(feature_fraction * #features) features of the raw table per
// the Gaussian / level-replacement recipe. Deterministic under cfg.seed.
DataTable inject_noise(const DataTable& clean, const NoiseConfig& cfg,
                       NoiseReport* report = nullptr);

// Feature-target association before/after corruption for the listed features.
// Numerical: Spearman rank correlation. Categorical: bias-corrected Cramer's V.
std::vector<AssociationRecord> correlation_drop_check(
    const DataTable& clean, const DataTable& corrupted, const IntVector& target,
    const std::vector<std::string>& corrupted_features);

double spearman_correlation(const Vector& x, const Vector& y);
double cramers_v_bias_corrected(const std::vector<int>& x, int x_card,
                                const std::vector<int>& y, int y_card);

// ---- encoded container I/O (binary, little-endian, documented in data/README.md) ----
void save_encoded(const EncodedDataset& ds, const std::string& path);
EncodedDataset load_encoded(const std::string& path);

}  // namespace nsdt
