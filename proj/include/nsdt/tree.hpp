#pragma once

#include "nsdt/common.hpp"
#include "nsdt/data.hpp"

#include <string>
#include <vector>

namespace nsdt {

enum class CondOp { le, gt, in_set, not_in_set };

const char* cond_op_glyph(CondOp op);

struct TreeNode {
  bool is_leaf = false;
  // internal node
  int feature = -1;
  CondOp op = CondOp::le;          // le (numerical) or in_set (categorical)
  int threshold_bin = -1;          // le: split on code <= threshold_bin
  std::vector<int> level_set;      // in_set: singleton from the fitter
  int left = -1;                   // condition satisfied
  int right = -1;                  // complement
  // leaf
  int leaf_id = -1;
  double weight_pos = 0.0;         // class-weighted sample mass at the leaf
  double weight_neg = 0.0;
  int majority = 0;
};

struct SymbolicTree {
  std::vector<TreeNode> nodes;  // node 0 is the root
  int depth = 0;
  int leaf_count = 0;

  int predict(const IntMatrix& codes, Index row) const;
  int leaf_of(const IntMatrix& codes, Index row) const;
};

struct TreeFitConfig {
  int max_depth = 6;
  int min_leaf = 50;
  std::array<double, 2> class_weights{1.0, 1.0};
  // random-forest extensions; ignored by the plain fitter defaults
  int feature_subsample = 0;  // 0 = all features at every node
  std::uint64_t seed = 0;
};

SymbolicTree fit_symbolic_tree(const EncodedDataset& data, const std::vector<Index>& rows,
                               const TreeFitConfig& config);

struct RuleCondition {
  int feature = -1;
  CondOp op = CondOp::le;
  int threshold_bin = -1;
  std::vector<int> level_set;
  int tree_node = -1;  // originating node; shared-threshold identity in NSDT
  bool padding = false;
};

struct DecisionRule {
  std::vector<RuleCondition> conditions;
  int leaf_id = -1;
  int majority = 0;
  double leaf_pos_fraction = 0.0;

  bool eval(const IntMatrix& codes, Index row) const;  // Boolean semantics
};

// One rule per leaf, left-to-right leaf order; left traversal keeps the node
// condition, right traversal appends its complement.
std::vector<DecisionRule> extract_rules(const SymbolicTree& tree);

enum class DedupePolicy { keep_deepest, keep_shallowest };

// Among conditions sharing (feature, operator) keep a single slot.
DecisionRule dedupe_rule(const DecisionRule& rule,
                         DedupePolicy policy = DedupePolicy::keep_deepest);

struct PaddedRuleSet {
  int slots = 0;
  std::vector<DecisionRule> rules;               // each holds exactly `slots` conditions
  std::vector<std::vector<std::uint8_t>> pad_mask;  // [rule][slot], 1 = padding

  Index rule_count() const { return static_cast<Index>(rules.size()); }
};

PaddedRuleSet pad_rules(const std::vector<DecisionRule>& rules, int slots);

// structured-text (JSONL) round trip: one rule per record
std::string rules_to_jsonl(const PaddedRuleSet& set);
PaddedRuleSet rules_from_jsonl(const std::string& text);

}  // namespace nsdt
