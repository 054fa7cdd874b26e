#pragma once

#include "nsdt/common.hpp"
#include "nsdt/model.hpp"

#include <cstdint>
#include <vector>

namespace nsdt {

struct RegularizerConfig {
  double alpha = 0.1;
  int samples_per_loss = 256;
  double membership_cut = 0.9;
  bool reflexivity = true;
  bool antisymmetry = true;
  bool transitivity = true;
  bool ranking = true;
  bool monotonicity = true;
  bool consistency = true;
  bool inclusiveness = true;

  bool any_enabled() const {
    return reflexivity || antisymmetry || transitivity || ranking || monotonicity ||
           consistency || inclusiveness;
  }
  void disable_all() {
    reflexivity = antisymmetry = transitivity = ranking = monotonicity = consistency =
        inclusiveness = false;
  }
};

// One element of a feature's homogeneous set Z: a bin/level embedding row or a
// node threshold row.
struct ZRef {
  int feature = -1;
  bool is_threshold = false;
  int index = 0;  // embedding row, or node id when is_threshold
};

struct TransSample {
  ZRef a, b, c;
  // direction 1: chains a<=b, b<=c; direction 2: the mirrored chain
  bool gate1 = false, gate2 = false;
  int branch1 = 0;  // argmax side: 0 = (a,b), 1 = (b,c)
  bool active1 = false;
  int branch2 = 0;  // argmin side
  bool active2 = false;
};

struct RankSample {
  int feature = -1;
  int bin_a = 0, bin_b = 0;
  double target = 0.5;
};

struct MonoSample {
  int node = -1;
  int upper = 0, lower = 0;  // sampled window ends (bin indices, upper < lower)
  std::vector<std::uint8_t> active_vs_upper;  // c in (u, l]
  std::vector<std::uint8_t> active_vs_lower;  // c in [u, l)
};

struct ConsSample {
  int node = -1;
  int decoded = 0;  // argmin |out - 0.5|, frozen within the step
  std::vector<std::uint8_t> active_below;  // j < d
  std::vector<std::uint8_t> active_above;  // j > d
};

struct InclusivePair {
  int node = -1;
  int level = 0;
  bool lower_branch = false;  // frozen side of min(y, 1-y)
};

// Sampled tuples plus every gradient-free gate (step values, ReLU activity,
// max/min branch, decoded indices) frozen at the sampling point.
struct RegPlan {
  std::vector<ZRef> ref_samples;
  std::vector<std::pair<ZRef, ZRef>> anti_samples;
  std::vector<TransSample> trans_samples;
  std::vector<RankSample> rank_samples;
  std::vector<MonoSample> mono_samples;
  std::vector<ConsSample> cons_samples;
  std::vector<InclusivePair> incl_pairs;
  // ge mirror set (gnsdt only)
  std::vector<std::pair<ZRef, ZRef>> ge_anti_samples;
  std::vector<TransSample> ge_trans_samples;
  std::vector<RankSample> ge_rank_samples;
  std::vector<MonoSample> ge_mono_samples;
  std::vector<ConsSample> ge_cons_samples;
  bool ge_suite = false;
  bool no_numerical_features = false;
};

struct RegBreakdown {
  double reflexivity = 0, antisymmetry = 0, transitivity = 0, ranking = 0;
  double monotonicity = 0, consistency = 0, inclusiveness = 0;
  double ge_antisymmetry = 0, ge_transitivity = 0, ge_ranking = 0;
  double ge_monotonicity = 0, ge_consistency = 0;

  double total() const {
    return reflexivity + antisymmetry + transitivity + ranking + monotonicity + consistency +
           inclusiveness + ge_antisymmetry + ge_transitivity + ge_ranking + ge_monotonicity +
           ge_consistency;
  }
};

// Per-feature node ids by module kind, plus eligible feature lists.
struct ZSets {
  std::vector<std::vector<int>> le_nodes, ge_nodes, be_nodes;  // per feature
  std::vector<int> numeric_features;       // non-degenerate, h >= 2
  std::vector<int> categorical_features;   // with at least one be node
};

ZSets collect_zsets(const FuzzyModel& model);

// Each loss draws from its own derived stream so that toggling one loss never
// shifts another's tuples.
RegPlan make_reg_plan(const FuzzyModel& model, const RegularizerConfig& config,
                      std::uint64_t seed);

// Forward pass always; when grad_scale != 0, d(total)/d(params) * grad_scale is
// accumulated into the model gradients. Smooth given the plan's frozen gates.
RegBreakdown eval_regularizers(FuzzyModel& model, const RegularizerConfig& config,
                               const RegPlan& plan, double grad_scale);

}  // namespace nsdt
