#include "nsdt/tree.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

namespace nsdt {

using nlohmann::json;

const char* cond_op_glyph(CondOp op) {
  switch (op) {
    case CondOp::le: return "<=";
    case CondOp::gt: return ">";
    case CondOp::in_set: return "in";
    case CondOp::not_in_set: return "not in";
  }
  return "?";
}

namespace {

bool node_condition_holds(const TreeNode& node, const IntMatrix& codes, Index row) {
  const int code = codes(row, node.feature);
  if (node.op == CondOp::le) return code <= node.threshold_bin;
  return std::find(node.level_set.begin(), node.level_set.end(), code) != node.level_set.end();
}

}  // namespace

int SymbolicTree::leaf_of(const IntMatrix& codes, Index row) const {
  int cur = 0;
  while (!nodes[cur].is_leaf)
    cur = node_condition_holds(nodes[cur], codes, row) ? nodes[cur].left : nodes[cur].right;
  return cur;
}

int SymbolicTree::predict(const IntMatrix& codes, Index row) const {
  return nodes[leaf_of(codes, row)].majority;
}

// ---------------------------------------------------------------------------
// greedy Gini fitter on integer codes
// ---------------------------------------------------------------------------

namespace {

struct FitContext {
  const EncodedDataset& data;
  const TreeFitConfig& config;
  std::vector<TreeNode> nodes;
  int depth = 0;
  int leaf_count = 0;
  Rng rng;

  FitContext(const EncodedDataset& d, const TreeFitConfig& c)
      : data(d), config(c), rng(c.seed) {}
};

double gini(double w_pos, double w_neg) {
  const double total = w_pos + w_neg;
  if (total <= 0) return 0.0;
  const double p = w_pos / total;
  return 2.0 * p * (1.0 - p);
}

struct SplitChoice {
  bool found = false;
  int feature = -1;
  int threshold = -1;  // numerical: code <= threshold; categorical: code == threshold
  double impurity = 0.0;
};

int make_leaf(FitContext& ctx, double w_pos, double w_neg) {
  TreeNode leaf;
  leaf.is_leaf = true;
  leaf.leaf_id = ctx.leaf_count++;
  leaf.weight_pos = w_pos;
  leaf.weight_neg = w_neg;
  leaf.majority = w_pos > w_neg ? 1 : 0;
  ctx.nodes.push_back(leaf);
  return static_cast<int>(ctx.nodes.size()) - 1;
}

int build_node(FitContext& ctx, const std::vector<Index>& rows, int depth) {
  ctx.depth = std::max(ctx.depth, depth);
  const auto& data = ctx.data;
  const double wp = ctx.config.class_weights[1], wn = ctx.config.class_weights[0];

  double w_pos = 0, w_neg = 0;
  Index n_pos = 0;
  for (Index r : rows) {
    if (data.target[r] == 1) {
      w_pos += wp;
      ++n_pos;
    } else {
      w_neg += wn;
    }
  }
  const Index n = static_cast<Index>(rows.size());
  const bool pure = (n_pos == 0 || n_pos == n);
  if (pure || depth >= ctx.config.max_depth || n < 2 * ctx.config.min_leaf)
    return make_leaf(ctx, w_pos, w_neg);

  const int f_count = static_cast<int>(data.features.size());
  std::vector<int> candidate_features;
  if (ctx.config.feature_subsample > 0 && ctx.config.feature_subsample < f_count) {
    candidate_features =
        ctx.rng.sample_without_replacement(f_count, ctx.config.feature_subsample);
    std::sort(candidate_features.begin(), candidate_features.end());
  } else {
    candidate_features.resize(f_count);
    for (int f = 0; f < f_count; ++f) candidate_features[f] = f;
  }

  const double parent = gini(w_pos, w_neg) * (w_pos + w_neg);
  SplitChoice best;
  best.impurity = parent - 1e-12;  // require strict improvement

  for (int f : candidate_features) {
    const FeatureSpec& spec = data.features[f];
    if (spec.degenerate || spec.cardinality() < 2) continue;
    const int card = spec.cardinality();
    // class-weighted histogram + raw counts per code
    std::vector<double> hist_pos(card, 0.0), hist_neg(card, 0.0);
    std::vector<Index> count(card, 0);
    for (Index r : rows) {
      const int code = data.codes(r, f);
      if (data.target[r] == 1)
        hist_pos[code] += wp;
      else
        hist_neg[code] += wn;
      ++count[code];
    }
    if (spec.kind == FeatureKind::numerical) {
      double left_pos = 0, left_neg = 0;
      Index left_n = 0;
      for (int t = 0; t < card - 1; ++t) {
        left_pos += hist_pos[t];
        left_neg += hist_neg[t];
        left_n += count[t];
        const Index right_n = n - left_n;
        if (left_n < ctx.config.min_leaf || right_n < ctx.config.min_leaf) continue;
        const double right_pos = w_pos - left_pos, right_neg = w_neg - left_neg;
        const double impurity = gini(left_pos, left_neg) * (left_pos + left_neg) +
                                gini(right_pos, right_neg) * (right_pos + right_neg);
        if (impurity < best.impurity) {
          best = {true, f, t, impurity};
        }
      }
    } else {
      // one-level indicator test: code == t goes left
      for (int t = 0; t < card; ++t) {
        const Index left_n = count[t], right_n = n - count[t];
        if (left_n < ctx.config.min_leaf || right_n < ctx.config.min_leaf) continue;
        const double left_pos = hist_pos[t], left_neg = hist_neg[t];
        const double right_pos = w_pos - left_pos, right_neg = w_neg - left_neg;
        const double impurity = gini(left_pos, left_neg) * (left_pos + left_neg) +
                                gini(right_pos, right_neg) * (right_pos + right_neg);
        if (impurity < best.impurity) {
          best = {true, f, t, impurity};
        }
      }
    }
  }

  if (!best.found) return make_leaf(ctx, w_pos, w_neg);

  std::vector<Index> left_rows, right_rows;
  const FeatureSpec& spec = data.features[best.feature];
  for (Index r : rows) {
    const int code = data.codes(r, best.feature);
    const bool left = spec.kind == FeatureKind::numerical ? code <= best.threshold
                                                          : code == best.threshold;
    (left ? left_rows : right_rows).push_back(r);
  }

  TreeNode node;
  node.feature = best.feature;
  if (spec.kind == FeatureKind::numerical) {
    node.op = CondOp::le;
    node.threshold_bin = best.threshold;
  } else {
    node.op = CondOp::in_set;
    node.level_set = {best.threshold};
  }
  const int self = static_cast<int>(ctx.nodes.size());
  ctx.nodes.push_back(node);
  ctx.nodes[self].left = build_node(ctx, left_rows, depth + 1);
  ctx.nodes[self].right = build_node(ctx, right_rows, depth + 1);
  return self;
}

}  // namespace

SymbolicTree fit_symbolic_tree(const EncodedDataset& data, const std::vector<Index>& rows,
                               const TreeFitConfig& config) {
  if (rows.empty()) throw NsdtError("fit_symbolic_tree: empty training split");
  if (config.max_depth < 1) throw NsdtError("fit_symbolic_tree: depth must be >= 1");
  FitContext ctx(data, config);
  build_node(ctx, rows, 0);
  SymbolicTree tree;
  tree.nodes = std::move(ctx.nodes);
  tree.depth = ctx.depth;
  tree.leaf_count = ctx.leaf_count;
  return tree;
}

// ---------------------------------------------------------------------------
// rules
// ---------------------------------------------------------------------------

bool DecisionRule::eval(const IntMatrix& codes, Index row) const {
  for (const RuleCondition& c : conditions) {
    if (c.padding) continue;
    const int code = codes(row, c.feature);
    bool in_set;
    switch (c.op) {
      case CondOp::le:
        if (!(code <= c.threshold_bin)) return false;
        break;
      case CondOp::gt:
        if (!(code > c.threshold_bin)) return false;
        break;
      case CondOp::in_set:
      case CondOp::not_in_set:
        in_set = std::find(c.level_set.begin(), c.level_set.end(), code) != c.level_set.end();
        if (c.op == CondOp::in_set ? !in_set : in_set) return false;
        break;
    }
  }
  return true;
}

namespace {

void walk(const SymbolicTree& tree, int node_id, std::vector<RuleCondition>& path,
          std::vector<DecisionRule>& out) {
  const TreeNode& node = tree.nodes[node_id];
  if (node.is_leaf) {
    DecisionRule rule;
    rule.conditions = path;
    rule.leaf_id = node.leaf_id;
    rule.majority = node.majority;
    const double total = node.weight_pos + node.weight_neg;
    rule.leaf_pos_fraction = total > 0 ? node.weight_pos / total : 0.0;
    out.push_back(std::move(rule));
    return;
  }
  RuleCondition cond;
  cond.feature = node.feature;
  cond.threshold_bin = node.threshold_bin;
  cond.level_set = node.level_set;
  cond.tree_node = node_id;

  cond.op = node.op;
  path.push_back(cond);
  walk(tree, node.left, path, out);
  path.pop_back();

  cond.op = node.op == CondOp::le ? CondOp::gt : CondOp::not_in_set;
  path.push_back(cond);
  walk(tree, node.right, path, out);
  path.pop_back();
}

}  // namespace

std::vector<DecisionRule> extract_rules(const SymbolicTree& tree) {
  std::vector<DecisionRule> rules;
  std::vector<RuleCondition> path;
  walk(tree, 0, path, rules);
  return rules;
}

DecisionRule dedupe_rule(const DecisionRule& rule, DedupePolicy policy) {
  DecisionRule out;
  out.leaf_id = rule.leaf_id;
  out.majority = rule.majority;
  out.leaf_pos_fraction = rule.leaf_pos_fraction;
  const auto& conds = rule.conditions;
  std::vector<bool> keep(conds.size(), true);
  std::map<std::pair<int, CondOp>, std::size_t> chosen;  // key -> kept position
  for (std::size_t i = 0; i < conds.size(); ++i) {
    const auto key = std::make_pair(conds[i].feature, conds[i].op);
    auto it = chosen.find(key);
    if (it == chosen.end()) {
      chosen[key] = i;
      continue;
    }
    // conditions are in root-to-leaf order: later = deeper
    if (policy == DedupePolicy::keep_deepest) {
      keep[it->second] = false;
      it->second = i;
    } else {
      keep[i] = false;
    }
  }
  for (std::size_t i = 0; i < conds.size(); ++i)
    if (keep[i]) out.conditions.push_back(conds[i]);
  return out;
}

PaddedRuleSet pad_rules(const std::vector<DecisionRule>& rules, int slots) {
  PaddedRuleSet set;
  set.slots = slots;
  for (const DecisionRule& rule : rules) {
    if (static_cast<int>(rule.conditions.size()) > slots)
      throw NsdtError("pad_rules: rule longer than slot count");
    DecisionRule padded = rule;
    std::vector<std::uint8_t> mask(static_cast<std::size_t>(slots), 0);
    for (std::size_t s = rule.conditions.size(); s < static_cast<std::size_t>(slots); ++s) {
      RuleCondition pad;
      pad.padding = true;
      padded.conditions.push_back(pad);
      mask[s] = 1;
    }
    set.rules.push_back(std::move(padded));
    set.pad_mask.push_back(std::move(mask));
  }
  return set;
}

// ---------------------------------------------------------------------------
// JSONL serialization
// ---------------------------------------------------------------------------

namespace {

const char* op_tag(CondOp op) {
  switch (op) {
    case CondOp::le: return "le";
    case CondOp::gt: return "gt";
    case CondOp::in_set: return "in";
    case CondOp::not_in_set: return "not_in";
  }
  return "?";
}

CondOp op_from_tag(const std::string& tag) {
  if (tag == "le") return CondOp::le;
  if (tag == "gt") return CondOp::gt;
  if (tag == "in") return CondOp::in_set;
  if (tag == "not_in") return CondOp::not_in_set;
  throw NsdtError("unknown condition op: " + tag);
}

}  // namespace

std::string rules_to_jsonl(const PaddedRuleSet& set) {
  std::ostringstream out;
  for (std::size_t r = 0; r < set.rules.size(); ++r) {
    const DecisionRule& rule = set.rules[r];
    json rec;
    rec["leaf_id"] = rule.leaf_id;
    rec["majority"] = rule.majority;
    rec["leaf_pos_fraction"] = rule.leaf_pos_fraction;
    rec["slots"] = set.slots;
    rec["pad_mask"] = set.pad_mask[r];
    rec["conditions"] = json::array();
    for (const RuleCondition& c : rule.conditions) {
      json jc;
      jc["padding"] = c.padding;
      if (!c.padding) {
        jc["feature"] = c.feature;
        jc["op"] = op_tag(c.op);
        jc["threshold_bin"] = c.threshold_bin;
        jc["level_set"] = c.level_set;
        jc["tree_node"] = c.tree_node;
      }
      rec["conditions"].push_back(std::move(jc));
    }
    out << rec.dump() << '\n';
  }
  return out.str();
}

PaddedRuleSet rules_from_jsonl(const std::string& text) {
  PaddedRuleSet set;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    json rec = json::parse(line);
    DecisionRule rule;
    rule.leaf_id = rec.at("leaf_id").get<int>();
    rule.majority = rec.at("majority").get<int>();
    rule.leaf_pos_fraction = rec.at("leaf_pos_fraction").get<double>();
    set.slots = rec.at("slots").get<int>();
    for (const json& jc : rec.at("conditions")) {
      RuleCondition c;
      c.padding = jc.at("padding").get<bool>();
      if (!c.padding) {
        c.feature = jc.at("feature").get<int>();
        c.op = op_from_tag(jc.at("op").get<std::string>());
        c.threshold_bin = jc.at("threshold_bin").get<int>();
        c.level_set = jc.at("level_set").get<std::vector<int>>();
        c.tree_node = jc.at("tree_node").get<int>();
      }
      rule.conditions.push_back(std::move(c));
    }
    set.pad_mask.push_back(rec.at("pad_mask").get<std::vector<std::uint8_t>>());
    set.rules.push_back(std::move(rule));
  }
  return set;
}

}  // namespace nsdt
