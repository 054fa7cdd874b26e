#pragma once

#include "nsdt/common.hpp"
#include "nsdt/data.hpp"
#include "nsdt/train.hpp"
#include "nsdt/tree.hpp"

#include <array>
#include <vector>

namespace nsdt {

enum class BaselineKind { knn, dtree, rforest };

struct BaselineConfig {
  BaselineKind kind = BaselineKind::dtree;
  int k = 15;             // knn
  int max_depth = 6;      // trees
  int min_leaf = 50;
  int tree_count = 100;   // rforest
  bool class_weighted = true;  // cost-sensitive Gini for the tree models
  std::uint64_t seed = 0;
};

struct BaselineResult {
  std::vector<int> predictions;  // aligned with eval rows
  Metrics metrics;
};

// knn consumes min-max-normalized raw numerical values plus one-hot
// categorical indicators; the tree models consume the integer codes. Split
// tags come from the encoded dataset so every model sees identical splits.
BaselineResult fit_predict_baseline(const BaselineConfig& config, const DataTable& raw,
                                    const EncodedDataset& enc, SplitTag eval_tag = kTest);

// relative drop percent: (before - after) / before * 100
double robustness_drop(double before, double after);

}  // namespace nsdt
