#include "nsdt/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace nsdt {

namespace {

std::array<double, 2> inverse_frequency_weights(const IntVector& target,
                                                const std::vector<Index>& rows) {
  Index n_pos = 0;
  for (Index r : rows) n_pos += target[r] == 1 ? 1 : 0;
  const Index n = static_cast<Index>(rows.size());
  const Index n_neg = n - n_pos;
  if (n_pos == 0 || n_neg == 0) return {1.0, 1.0};
  return {static_cast<double>(n) / (2.0 * static_cast<double>(n_neg)),
          static_cast<double>(n) / (2.0 * static_cast<double>(n_pos))};
}

// raw numerical columns min-max scaled on train, categorical codes one-hot
Matrix knn_design_matrix(const DataTable& raw, const EncodedDataset& enc,
                         const std::vector<Index>& fit_rows, const std::vector<Index>& rows) {
  const std::size_t f_count = raw.columns.size();
  std::vector<double> lo(f_count, 0), hi(f_count, 1);
  Index width = 0;
  for (std::size_t f = 0; f < f_count; ++f) {
    if (raw.columns[f].kind == FeatureKind::numerical) {
      double mn = raw.columns[f].values[fit_rows.front()];
      double mx = mn;
      for (Index r : fit_rows) {
        mn = std::min(mn, raw.columns[f].values[r]);
        mx = std::max(mx, raw.columns[f].values[r]);
      }
      lo[f] = mn;
      hi[f] = mx;
      width += 1;
    } else {
      width += enc.features[f].cardinality();
    }
  }
  Matrix out = Matrix::Zero(static_cast<Index>(rows.size()), width);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    Index col = 0;
    for (std::size_t f = 0; f < f_count; ++f) {
      if (raw.columns[f].kind == FeatureKind::numerical) {
        const double span = hi[f] - lo[f];
        out(static_cast<Index>(i), col) =
            span > 0 ? (raw.columns[f].values[rows[i]] - lo[f]) / span : 0.0;
        col += 1;
      } else {
        const int code = enc.codes(rows[i], static_cast<Index>(f));
        out(static_cast<Index>(i), col + code) = 1.0;
        col += enc.features[f].cardinality();
      }
    }
  }
  return out;
}

std::vector<int> knn_predict(const BaselineConfig& config, const DataTable& raw,
                             const EncodedDataset& enc, const std::vector<Index>& train_rows,
                             const std::vector<Index>& eval_rows) {
  if (config.k < 1) throw NsdtError("knn: k must be >= 1");
  if (config.k > static_cast<int>(train_rows.size()))
    throw NsdtError("knn: k exceeds training size");
  const Matrix train = knn_design_matrix(raw, enc, train_rows, train_rows);
  const Matrix eval = knn_design_matrix(raw, enc, train_rows, eval_rows);
  const Vector train_sq = train.rowwise().squaredNorm();

  std::vector<int> pred(eval_rows.size(), 0);
  const Index chunk = 256;
  std::vector<Index> order(train_rows.size());
  for (Index start = 0; start < eval.rows(); start += chunk) {
    const Index stop = std::min(eval.rows(), start + chunk);
    const Matrix block = eval.middleRows(start, stop - start);
    const Vector block_sq = block.rowwise().squaredNorm();
    Matrix dist = -2.0 * (block * train.transpose());
    dist.colwise() += block_sq;
    dist.rowwise() += train_sq.transpose();
    for (Index i = 0; i < dist.rows(); ++i) {
      std::iota(order.begin(), order.end(), Index{0});
      std::nth_element(order.begin(), order.begin() + (config.k - 1), order.end(),
                       [&](Index a, Index b) {
                         if (dist(i, a) != dist(i, b)) return dist(i, a) < dist(i, b);
                         return a < b;
                       });
      int votes = 0;
      Index nearest = order[0];
      for (int j = 0; j < config.k; ++j) {
        votes += enc.target[train_rows[static_cast<std::size_t>(order[j])]];
        if (dist(i, order[j]) < dist(i, nearest) ||
            (dist(i, order[j]) == dist(i, nearest) && order[j] < nearest))
          nearest = order[j];
      }
      const int row_pred =
          2 * votes > config.k
              ? 1
              : (2 * votes < config.k
                     ? 0
                     : enc.target[train_rows[static_cast<std::size_t>(nearest)]]);
      pred[static_cast<std::size_t>(start + i)] = row_pred;
    }
  }
  return pred;
}

std::vector<int> forest_predict(const BaselineConfig& config, const EncodedDataset& enc,
                                const std::vector<Index>& train_rows,
                                const std::vector<Index>& eval_rows,
                                const std::array<double, 2>& class_weights) {
  if (config.tree_count < 1) throw NsdtError("rforest: tree count must be >= 1");
  Rng rng(config.seed);
  const int mtry = std::max(
      1, static_cast<int>(std::ceil(std::sqrt(static_cast<double>(enc.features.size())))));
  Vector prob_sum = Vector::Zero(static_cast<Index>(eval_rows.size()));
  for (int t = 0; t < config.tree_count; ++t) {
    std::vector<Index> bootstrap(train_rows.size());
    for (std::size_t i = 0; i < train_rows.size(); ++i)
      bootstrap[i] = train_rows[static_cast<std::size_t>(
          rng.uniform_int(0, static_cast<int>(train_rows.size()) - 1))];
    TreeFitConfig tree_cfg;
    tree_cfg.max_depth = config.max_depth;
    tree_cfg.min_leaf = config.min_leaf;
    tree_cfg.class_weights = class_weights;
    tree_cfg.feature_subsample = mtry;
    tree_cfg.seed = rng.next_seed();
    const SymbolicTree tree = fit_symbolic_tree(enc, bootstrap, tree_cfg);
    for (std::size_t i = 0; i < eval_rows.size(); ++i) {
      const TreeNode& leaf = tree.nodes[static_cast<std::size_t>(tree.leaf_of(enc.codes, eval_rows[i]))];
      const double mass = leaf.weight_pos + leaf.weight_neg;
      prob_sum[static_cast<Index>(i)] += mass > 0 ? leaf.weight_pos / mass : 0.5;
    }
  }
  std::vector<int> pred(eval_rows.size());
  for (std::size_t i = 0; i < eval_rows.size(); ++i)
    pred[i] = prob_sum[static_cast<Index>(i)] * 2.0 > config.tree_count ? 1 : 0;
  return pred;
}

}  // namespace

BaselineResult fit_predict_baseline(const BaselineConfig& config, const DataTable& raw,
                                    const EncodedDataset& enc, SplitTag eval_tag) {
  const std::vector<Index> train_rows = enc.rows_with(kTrain);
  const std::vector<Index> eval_rows = enc.rows_with(eval_tag);
  if (train_rows.empty() || eval_rows.empty())
    throw NsdtError("fit_predict_baseline: empty split");

  const std::array<double, 2> weights = config.class_weighted
                                            ? inverse_frequency_weights(enc.target, train_rows)
                                            : std::array<double, 2>{1.0, 1.0};
  BaselineResult result;
  switch (config.kind) {
    case BaselineKind::knn:
      result.predictions = knn_predict(config, raw, enc, train_rows, eval_rows);
      break;
    case BaselineKind::dtree: {
      TreeFitConfig tree_cfg;
      tree_cfg.max_depth = config.max_depth;
      tree_cfg.min_leaf = config.min_leaf;
      tree_cfg.class_weights = weights;
      tree_cfg.seed = config.seed;
      const SymbolicTree tree = fit_symbolic_tree(enc, train_rows, tree_cfg);
      for (Index r : eval_rows) result.predictions.push_back(tree.predict(enc.codes, r));
      break;
    }
    case BaselineKind::rforest:
      result.predictions = forest_predict(config, enc, train_rows, eval_rows, weights);
      break;
  }
  result.metrics = metrics_from_predictions(result.predictions, enc.target, eval_rows);
  return result;
}

double robustness_drop(double before, double after) {
  if (before == 0.0) throw NsdtError("robustness_drop: before metric is zero");
  return (before - after) / before * 100.0;
}

}  // namespace nsdt
