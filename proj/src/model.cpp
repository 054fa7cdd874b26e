#include "nsdt/model.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <map>

namespace nsdt {

using nlohmann::json;

std::vector<Tensor*> FuzzyModel::parameters() {
  std::vector<Tensor*> out;
  for (Tensor& t : embeddings) out.push_back(&t);
  if (thresholds.size() > 0) out.push_back(&thresholds);
  for (Tensor* t : le.parameters()) out.push_back(t);
  for (Tensor* t : be.parameters()) out.push_back(t);
  if (ge.initialized())
    for (Tensor* t : ge.parameters()) out.push_back(t);
  out.push_back(&head_w);
  out.push_back(&head_b);
  return out;
}

std::vector<const Tensor*> FuzzyModel::parameters() const {
  auto mutable_self = const_cast<FuzzyModel*>(this);
  std::vector<Tensor*> params = mutable_self->parameters();
  return {params.begin(), params.end()};
}

void FuzzyModel::zero_grads() {
  for (Tensor* t : parameters()) t->zero_grad();
}

const OperatorMlp& FuzzyModel::module_of(ModuleKind kind) const {
  switch (kind) {
    case ModuleKind::le: return le;
    case ModuleKind::ge: return ge;
    case ModuleKind::be: return be;
  }
  throw NsdtError("module_of: bad kind");
}

OperatorMlp& FuzzyModel::module_of(ModuleKind kind) {
  switch (kind) {
    case ModuleKind::le: return le;
    case ModuleKind::ge: return ge;
    case ModuleKind::be: return be;
  }
  throw NsdtError("module_of: bad kind");
}

Eigen::RowVectorXd FuzzyModel::node_input(Index node, int code) const {
  const FuzzyNode& fn = nodes[static_cast<std::size_t>(node)];
  const Tensor& emb = embeddings[static_cast<std::size_t>(fn.feature)];
  if (code < 0 || code >= emb.value.rows())
    throw NsdtError("node_input: code out of range");
  const int dim = config.dim;
  Eigen::RowVectorXd x(2 * dim);
  x.head(dim) = emb.value.row(code);
  x.tail(dim) = thresholds.value.row(node);
  return x;
}

double FuzzyModel::node_output(Index rule, int slot, const IntMatrix& codes, Index row) const {
  const SlotRef& ref = slots[static_cast<std::size_t>(rule)][static_cast<std::size_t>(slot)];
  if (ref.padding) throw NsdtError("node_output: padding slot queried");
  const FuzzyNode& fn = nodes[static_cast<std::size_t>(ref.node)];
  const int code = codes(row, fn.feature);
  const double y = module_of(fn.module).forward_one(node_input(ref.node, code));
  return ref.complement ? 1.0 - y : y;
}

double FuzzyModel::rule_output(Index rule, const IntMatrix& codes, Index row) const {
  double product = 1.0;
  const auto& rule_slots = slots[static_cast<std::size_t>(rule)];
  for (std::size_t s = 0; s < rule_slots.size(); ++s) {
    if (rule_slots[s].padding) continue;
    product *= node_output(rule, static_cast<int>(s), codes, row);
  }
  return product;
}

Eigen::Vector2d FuzzyModel::logits(const IntMatrix& codes, Index row) const {
  const Index L = rule_count();
  Vector r(L);
  for (Index i = 0; i < L; ++i) r[i] = rule_output(i, codes, row);
  Eigen::Vector2d out = head_w.value.transpose() * r;
  out += head_b.value.row(0).transpose();
  return out;
}

Eigen::Vector2d softmax2(const Eigen::Vector2d& logits) {
  const double m = logits.maxCoeff();
  Eigen::Vector2d e = (logits.array() - m).exp();
  return e / e.sum();
}

Eigen::Vector2d FuzzyModel::probabilities(const IntMatrix& codes, Index row) const {
  return softmax2(logits(codes, row));
}

int FuzzyModel::predict(const IntMatrix& codes, Index row) const {
  const Eigen::Vector2d l = logits(codes, row);
  return l[1] > l[0] ? 1 : 0;
}

// ---------------------------------------------------------------------------
// builders
// ---------------------------------------------------------------------------

namespace {

void init_shared(FuzzyModel& model, const PaddedRuleSet& rules,
                 const std::vector<FeatureSpec>& features,
                 const std::vector<BinMapping>& bin_maps, const ModelConfig& config,
                 Rng& rng) {
  model.config = config;
  model.features = features;
  model.bin_maps = bin_maps;
  model.rules = rules;
  for (std::size_t f = 0; f < features.size(); ++f) {
    Tensor emb;
    emb.name = "embeddings/" + features[f].name;
    const int card = std::max(1, features[f].cardinality());
    emb.value.resize(card, config.dim);
    for (Index r = 0; r < emb.value.rows(); ++r)
      for (Index c = 0; c < emb.value.cols(); ++c)
        emb.value(r, c) = rng.normal(0.0, config.embed_scale);
    emb.zero_grad();
    model.embeddings.push_back(std::move(emb));
  }
  model.le.init("op/le", 2 * config.dim, config.hidden, rng);
  model.be.init("op/be", 2 * config.dim, config.hidden, rng);
  if (config.variant == Variant::gnsdt) {
    model.ge.init("op/ge", 2 * config.dim, config.hidden, rng);
    if (config.mirror_ge_init) model.ge.mirror_complement_of(model.le);
  }
}

// threshold row seeded from the symbolic split's embedding plus small noise
void seed_threshold(FuzzyModel& model, Index node, const RuleCondition& cond, Rng& rng) {
  const FuzzyNode& fn = model.nodes[static_cast<std::size_t>(node)];
  const Tensor& emb = model.embeddings[static_cast<std::size_t>(fn.feature)];
  int seed_row = 0;
  if (cond.op == CondOp::le || cond.op == CondOp::gt) {
    seed_row = std::clamp(cond.threshold_bin, 0, static_cast<int>(emb.value.rows()) - 1);
  } else if (!cond.level_set.empty()) {
    seed_row = std::clamp(cond.level_set.front(), 0, static_cast<int>(emb.value.rows()) - 1);
  }
  for (int c = 0; c < model.config.dim; ++c)
    model.thresholds.value(node, c) =
        emb.value(seed_row, c) + rng.normal(0.0, model.config.threshold_noise);
}

void init_head(FuzzyModel& model, Rng& rng) {
  const Index L = model.rule_count();
  model.head_w.name = "head/w";
  model.head_w.value.resize(L, 2);
  for (Index r = 0; r < L; ++r)
    for (Index c = 0; c < 2; ++c)
      model.head_w.value(r, c) = rng.normal(0.0, model.config.head_init);
  model.head_b.name = "head/b";
  model.head_b.value = Matrix::Zero(1, 2);
  model.head_w.zero_grad();
  model.head_b.zero_grad();
}

ModuleKind module_for(const RuleCondition& cond, Variant variant) {
  switch (cond.op) {
    case CondOp::le: return ModuleKind::le;
    case CondOp::gt: return variant == Variant::gnsdt ? ModuleKind::ge : ModuleKind::le;
    case CondOp::in_set:
    case CondOp::not_in_set: return ModuleKind::be;
  }
  throw NsdtError("module_for: bad op");
}

bool slot_complement(const RuleCondition& cond, Variant variant) {
  if (cond.op == CondOp::gt) return variant != Variant::gnsdt;
  return cond.op == CondOp::not_in_set;
}

}  // namespace

FuzzyModel build_nsdt(const PaddedRuleSet& rules, const std::vector<FeatureSpec>& features,
                      const std::vector<BinMapping>& bin_maps, const ModelConfig& config) {
  if (rules.rules.empty()) throw NsdtError("build_nsdt: empty rule set");
  FuzzyModel model;
  ModelConfig cfg = config;
  cfg.variant = Variant::nsdt;
  Rng rng(cfg.seed);
  init_shared(model, rules, features, bin_maps, cfg, rng);

  // one fuzzy node per originating tree node, shared across rules
  std::map<int, Index> node_of_tree;
  std::vector<const RuleCondition*> seeds;
  model.slots.resize(rules.rules.size());
  for (std::size_t r = 0; r < rules.rules.size(); ++r) {
    for (const RuleCondition& cond : rules.rules[r].conditions) {
      SlotRef ref;
      if (!cond.padding) {
        auto it = node_of_tree.find(cond.tree_node);
        if (it == node_of_tree.end()) {
          const Index id = static_cast<Index>(model.nodes.size());
          FuzzyNode fn;
          fn.feature = cond.feature;
          fn.module = module_for(cond, Variant::nsdt);
          fn.tree_node = cond.tree_node;
          model.nodes.push_back(fn);
          seeds.push_back(&cond);
          it = node_of_tree.emplace(cond.tree_node, id).first;
        }
        ref.node = static_cast<int>(it->second);
        ref.complement = slot_complement(cond, Variant::nsdt);
        ref.padding = false;
      }
      model.slots[r].push_back(ref);
    }
  }

  model.thresholds.name = "thresholds";
  model.thresholds.value.resize(static_cast<Index>(model.nodes.size()), cfg.dim);
  model.thresholds.zero_grad();
  for (std::size_t n = 0; n < model.nodes.size(); ++n)
    seed_threshold(model, static_cast<Index>(n), *seeds[n], rng);
  init_head(model, rng);
  return model;
}

FuzzyModel build_gnsdt(const PaddedRuleSet& rules, const std::vector<FeatureSpec>& features,
                       const std::vector<BinMapping>& bin_maps, const ModelConfig& config) {
  if (rules.rules.empty()) throw NsdtError("build_gnsdt: empty rule set");
  FuzzyModel model;
  ModelConfig cfg = config;
  cfg.variant = Variant::gnsdt;
  Rng rng(cfg.seed);
  init_shared(model, rules, features, bin_maps, cfg, rng);

  // every (rule, slot) owns its node and threshold
  std::vector<const RuleCondition*> seeds;
  model.slots.resize(rules.rules.size());
  for (std::size_t r = 0; r < rules.rules.size(); ++r) {
    const auto& conds = rules.rules[r].conditions;
    for (std::size_t s = 0; s < conds.size(); ++s) {
      SlotRef ref;
      if (!conds[s].padding) {
        FuzzyNode fn;
        fn.feature = conds[s].feature;
        fn.module = module_for(conds[s], Variant::gnsdt);
        fn.tree_node = conds[s].tree_node;
        fn.rule = static_cast<int>(r);
        fn.slot = static_cast<int>(s);
        ref.node = static_cast<int>(model.nodes.size());
        ref.complement = slot_complement(conds[s], Variant::gnsdt);
        ref.padding = false;
        model.nodes.push_back(fn);
        seeds.push_back(&conds[s]);
      }
      model.slots[r].push_back(ref);
    }
  }

  model.thresholds.name = "thresholds";
  model.thresholds.value.resize(static_cast<Index>(model.nodes.size()), cfg.dim);
  model.thresholds.zero_grad();
  for (std::size_t n = 0; n < model.nodes.size(); ++n)
    seed_threshold(model, static_cast<Index>(n), *seeds[n], rng);
  init_head(model, rng);
  return model;
}

// ---------------------------------------------------------------------------
// batched evaluation
// ---------------------------------------------------------------------------

NodeTables node_tables(const FuzzyModel& model, double dropout, Rng* rng) {
  NodeTables tables;
  const Index n_nodes = model.node_count();
  tables.out.resize(static_cast<std::size_t>(n_nodes));
  tables.cache.resize(static_cast<std::size_t>(n_nodes));
  const int dim = model.config.dim;
  for (Index n = 0; n < n_nodes; ++n) {
    const FuzzyNode& fn = model.nodes[static_cast<std::size_t>(n)];
    const Tensor& emb = model.embeddings[static_cast<std::size_t>(fn.feature)];
    const Index card = emb.value.rows();
    Matrix X(card, 2 * dim);
    X.leftCols(dim) = emb.value;
    X.rightCols(dim) = model.thresholds.value.row(n).replicate(card, 1);
    tables.out[static_cast<std::size_t>(n)] = model.module_of(fn.module).forward(
        X, &tables.cache[static_cast<std::size_t>(n)], dropout, rng);
  }
  return tables;
}

Matrix batch_rule_outputs(const FuzzyModel& model, const NodeTables& tables,
                          const IntMatrix& codes, const std::vector<Index>& rows) {
  const Index n = static_cast<Index>(rows.size());
  const Index L = model.rule_count();
  Matrix out(n, L);
  for (Index i = 0; i < n; ++i) {
    const Index row = rows[static_cast<std::size_t>(i)];
    for (Index r = 0; r < L; ++r) {
      double product = 1.0;
      for (const SlotRef& ref : model.slots[static_cast<std::size_t>(r)]) {
        if (ref.padding) continue;
        const FuzzyNode& fn = model.nodes[static_cast<std::size_t>(ref.node)];
        const double v =
            tables.out[static_cast<std::size_t>(ref.node)][codes(row, fn.feature)];
        product *= ref.complement ? 1.0 - v : v;
      }
      out(i, r) = product;
    }
  }
  return out;
}

Matrix batch_logits(const FuzzyModel& model, const Matrix& rule_outputs) {
  Matrix logits = rule_outputs * model.head_w.value;
  logits.rowwise() += model.head_b.value.row(0);
  return logits;
}

// ---------------------------------------------------------------------------
// checkpoint container
// ---------------------------------------------------------------------------

namespace {

constexpr char kCheckpointMagic[8] = {'N', 'S', 'D', 'T', 'C', 'P', '1', '\n'};

json features_to_json(const std::vector<FeatureSpec>& features,
                      const std::vector<BinMapping>& maps) {
  json out = json::array();
  for (std::size_t f = 0; f < features.size(); ++f) {
    json jf;
    jf["name"] = features[f].name;
    jf["kind"] = features[f].kind == FeatureKind::numerical ? "num" : "cat";
    jf["bin_count"] = features[f].bin_count;
    jf["levels"] = features[f].levels;
    jf["degenerate"] = features[f].degenerate;
    jf["edges"] = f < maps.size() ? maps[f].edges : std::vector<double>{};
    out.push_back(std::move(jf));
  }
  return out;
}

void features_from_json(const json& in, std::vector<FeatureSpec>* features,
                        std::vector<BinMapping>* maps) {
  int index = 0;
  for (const json& jf : in) {
    FeatureSpec spec;
    spec.name = jf.at("name").get<std::string>();
    spec.kind =
        jf.at("kind").get<std::string>() == "num" ? FeatureKind::numerical : FeatureKind::categorical;
    spec.bin_count = jf.at("bin_count").get<int>();
    spec.levels = jf.at("levels").get<std::vector<std::string>>();
    spec.degenerate = jf.at("degenerate").get<bool>();
    BinMapping map;
    map.feature = index++;
    map.edges = jf.at("edges").get<std::vector<double>>();
    features->push_back(std::move(spec));
    maps->push_back(std::move(map));
  }
}

}  // namespace

void save_checkpoint(const FuzzyModel& model, const std::string& path) {
  json header;
  header["format"] = "nsdt-checkpoint-v1";
  header["variant"] = model.config.variant == Variant::nsdt ? "nsdt" : "gnsdt";
  header["dim"] = model.config.dim;
  header["hidden"] = model.config.hidden;
  header["embed_scale"] = model.config.embed_scale;
  header["threshold_noise"] = model.config.threshold_noise;
  header["head_init"] = model.config.head_init;
  header["mirror_ge_init"] = model.config.mirror_ge_init;
  header["seed"] = model.config.seed;
  header["features"] = features_to_json(model.features, model.bin_maps);
  header["rules_jsonl"] = rules_to_jsonl(model.rules);
  header["nodes"] = json::array();
  for (const FuzzyNode& fn : model.nodes) {
    json jn;
    jn["feature"] = fn.feature;
    jn["module"] = fn.module == ModuleKind::le ? "le" : (fn.module == ModuleKind::ge ? "ge" : "be");
    jn["tree_node"] = fn.tree_node;
    jn["rule"] = fn.rule;
    jn["slot"] = fn.slot;
    header["nodes"].push_back(std::move(jn));
  }
  header["slots"] = json::array();
  for (const auto& rule_slots : model.slots) {
    json jr = json::array();
    for (const SlotRef& ref : rule_slots)
      jr.push_back({{"node", ref.node}, {"complement", ref.complement}, {"padding", ref.padding}});
    header["slots"].push_back(std::move(jr));
  }

  const std::vector<const Tensor*> params = model.parameters();
  json tensors = json::array();
  for (const Tensor* t : params)
    tensors.push_back({{"name", t->name}, {"rows", t->value.rows()}, {"cols", t->value.cols()}});
  header["tensors"] = std::move(tensors);

  const std::string head = header.dump();
  std::ofstream out(path, std::ios::binary);
  if (!out) throw NsdtError("cannot write " + path);
  out.write(kCheckpointMagic, sizeof(kCheckpointMagic));
  const std::uint64_t head_len = head.size();
  out.write(reinterpret_cast<const char*>(&head_len), sizeof(head_len));
  out.write(head.data(), static_cast<std::streamsize>(head.size()));
  // row-major float64, little-endian host order
  for (const Tensor* t : params)
    for (Index r = 0; r < t->value.rows(); ++r)
      for (Index c = 0; c < t->value.cols(); ++c) {
        const double v = t->value(r, c);
        out.write(reinterpret_cast<const char*>(&v), sizeof(v));
      }
  if (!out) throw NsdtError("write failed: " + path);
}

FuzzyModel load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw NsdtError("cannot open " + path);
  char magic[8];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kCheckpointMagic, sizeof(magic)) != 0)
    throw NsdtError("not a checkpoint container: " + path);
  std::uint64_t head_len = 0;
  in.read(reinterpret_cast<char*>(&head_len), sizeof(head_len));
  std::string head(head_len, '\0');
  in.read(head.data(), static_cast<std::streamsize>(head_len));
  if (!in) throw NsdtError("truncated checkpoint: " + path);
  json header = json::parse(head);

  ModelConfig cfg;
  cfg.variant = header.at("variant").get<std::string>() == "nsdt" ? Variant::nsdt : Variant::gnsdt;
  cfg.dim = header.at("dim").get<int>();
  cfg.hidden = header.at("hidden").get<std::vector<int>>();
  cfg.embed_scale = header.at("embed_scale").get<double>();
  cfg.threshold_noise = header.at("threshold_noise").get<double>();
  cfg.head_init = header.at("head_init").get<double>();
  cfg.mirror_ge_init = header.at("mirror_ge_init").get<bool>();
  cfg.seed = header.at("seed").get<std::uint64_t>();

  std::vector<FeatureSpec> features;
  std::vector<BinMapping> maps;
  features_from_json(header.at("features"), &features, &maps);
  PaddedRuleSet rules = rules_from_jsonl(header.at("rules_jsonl").get<std::string>());

  FuzzyModel model = cfg.variant == Variant::nsdt ? build_nsdt(rules, features, maps, cfg)
                                                  : build_gnsdt(rules, features, maps, cfg);

  // overwrite parameter values from the tensor section
  std::vector<Tensor*> params = model.parameters();
  const json& tensors = header.at("tensors");
  if (tensors.size() != params.size())
    throw NsdtError("checkpoint tensor count mismatch");
  for (std::size_t i = 0; i < params.size(); ++i) {
    const json& jt = tensors[i];
    if (jt.at("name").get<std::string>() != params[i]->name)
      throw NsdtError("checkpoint tensor name mismatch: expected " + params[i]->name);
    const Index rows = jt.at("rows").get<Index>(), cols = jt.at("cols").get<Index>();
    if (rows != params[i]->value.rows() || cols != params[i]->value.cols())
      throw NsdtError("checkpoint tensor shape mismatch: " + params[i]->name);
    for (Index r = 0; r < rows; ++r)
      for (Index c = 0; c < cols; ++c) {
        double v = 0;
        in.read(reinterpret_cast<char*>(&v), sizeof(v));
        params[i]->value(r, c) = v;
      }
  }
  if (!in) throw NsdtError("truncated checkpoint tensors: " + path);
  return model;
}

}  // namespace nsdt
