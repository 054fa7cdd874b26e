#pragma once

#include "nsdt/common.hpp"
#include "nsdt/data.hpp"
#include "nsdt/mlp.hpp"
#include "nsdt/tree.hpp"

#include <string>
#include <vector>

namespace nsdt {

enum class Variant { nsdt, gnsdt };
enum class ModuleKind { le, ge, be };

struct ModelConfig {
  Variant variant = Variant::nsdt;
  int dim = 16;
  std::vector<int> hidden{64, 64};
  double embed_scale = 0.5;       // stddev of embedding init
  double threshold_noise = 0.01;  // stddev added to the seeding bin embedding
  double head_init = 0.01;
  bool mirror_ge_init = true;     // gnsdt: ge starts as the exact complement of le
  std::uint64_t seed = 0;
};

// One fuzzy relational node. NSDT shares a node across every rule that
// traverses the originating tree node; G-NSDT owns one per (rule, slot).
struct FuzzyNode {
  int feature = -1;
  ModuleKind module = ModuleKind::le;
  int tree_node = -1;
  int rule = -1;  // gnsdt provenance
  int slot = -1;
};

struct SlotRef {
  int node = -1;
  bool complement = false;  // gt as 1-le (nsdt), not-in as 1-be (both variants)
  bool padding = true;
};

struct FuzzyModel {
  ModelConfig config;
  std::vector<FeatureSpec> features;
  std::vector<BinMapping> bin_maps;
  PaddedRuleSet rules;
  std::vector<FuzzyNode> nodes;
  std::vector<std::vector<SlotRef>> slots;  // [rule][slot]

  std::vector<Tensor> embeddings;  // per feature: cardinality x dim (bins or levels)
  Tensor thresholds;               // node_count x dim
  OperatorMlp le, be, ge;
  Tensor head_w;  // L x 2
  Tensor head_b;  // 1 x 2

  Index rule_count() const { return rules.rule_count(); }
  Index node_count() const { return static_cast<Index>(nodes.size()); }

  std::vector<Tensor*> parameters();
  std::vector<const Tensor*> parameters() const;
  void zero_grads();

  const OperatorMlp& module_of(ModuleKind kind) const;
  OperatorMlp& module_of(ModuleKind kind);

  // concatenated (argument embedding, threshold embedding) input row for a node
  Eigen::RowVectorXd node_input(Index node, int code) const;

  // ---- scalar evaluation path ----
  double node_output(Index rule, int slot, const IntMatrix& codes, Index row) const;
  double rule_output(Index rule, const IntMatrix& codes, Index row) const;
  Eigen::Vector2d logits(const IntMatrix& codes, Index row) const;
  Eigen::Vector2d probabilities(const IntMatrix& codes, Index row) const;
  int predict(const IntMatrix& codes, Index row) const;
};

FuzzyModel build_nsdt(const PaddedRuleSet& rules, const std::vector<FeatureSpec>& features,
                      const std::vector<BinMapping>& bin_maps, const ModelConfig& config);
FuzzyModel build_gnsdt(const PaddedRuleSet& rules, const std::vector<FeatureSpec>& features,
                       const std::vector<BinMapping>& bin_maps, const ModelConfig& config);

// ---- batched evaluation via per-node output tables ----
// The module output depends only on (node, code), so each node is evaluated
// once per distinct code and samples gather from the table.
struct NodeTables {
  std::vector<Vector> out;
  std::vector<MlpCache> cache;
};

NodeTables node_tables(const FuzzyModel& model, double dropout = 0.0, Rng* rng = nullptr);

// rows x L matrix of rule outputs
Matrix batch_rule_outputs(const FuzzyModel& model, const NodeTables& tables,
                          const IntMatrix& codes, const std::vector<Index>& rows);
// rows x 2 logits through the head
Matrix batch_logits(const FuzzyModel& model, const Matrix& rule_outputs);

Eigen::Vector2d softmax2(const Eigen::Vector2d& logits);

// ---- checkpoint container (binary, named float64 tensors) ----
void save_checkpoint(const FuzzyModel& model, const std::string& path);
FuzzyModel load_checkpoint(const std::string& path);

}  // namespace nsdt
