#include "nsdt/regularizers.hpp"

#include <algorithm>
#include <cmath>

namespace nsdt {

namespace {

constexpr std::uint64_t kStreamSalt[12] = {
    0x9e3779b97f4a7c15ull, 0xbf58476d1ce4e5b9ull, 0x94d049bb133111ebull,
    0xd6e8feb86659fd93ull, 0xa5a5a5a5a5a5a5a5ull, 0xc3c3c3c3c3c3c3c3ull,
    0x123456789abcdef0ull, 0x0fedcba987654321ull, 0x1111111111111111ull,
    0x2222222222222222ull, 0x3333333333333333ull, 0x4444444444444444ull};

Rng stream_rng(std::uint64_t seed, int loss_id) {
  return Rng(seed ^ kStreamSalt[loss_id]);
}

Eigen::RowVectorXd z_row(const FuzzyModel& model, const ZRef& ref) {
  if (ref.is_threshold) return model.thresholds.value.row(ref.index);
  return model.embeddings[static_cast<std::size_t>(ref.feature)].value.row(ref.index);
}

void z_scatter(FuzzyModel& model, const ZRef& ref,
               const Eigen::Ref<const Eigen::RowVectorXd>& grad) {
  if (ref.is_threshold)
    model.thresholds.grad.row(ref.index) += grad;
  else
    model.embeddings[static_cast<std::size_t>(ref.feature)].grad.row(ref.index) += grad;
}

// Collects (left, right) embedding pairs for one module, forwards them as a
// single batch, and backpropagates accumulated dy into module weights and the
// referenced embedding rows.
class PairBatch {
 public:
  PairBatch(FuzzyModel& model, ModuleKind kind) : model_(model), kind_(kind) {}

  int add(const ZRef& left, const ZRef& right) {
    refs_.emplace_back(left, right);
    return static_cast<int>(refs_.size()) - 1;
  }

  void forward() {
    const int dim = model_.config.dim;
    const Index n = static_cast<Index>(refs_.size());
    Matrix X(n, 2 * dim);
    for (Index i = 0; i < n; ++i) {
      X.row(i).head(dim) = z_row(model_, refs_[static_cast<std::size_t>(i)].first);
      X.row(i).tail(dim) = z_row(model_, refs_[static_cast<std::size_t>(i)].second);
    }
    y_ = model_.module_of(kind_).forward(X, &cache_);
    dy_ = Vector::Zero(n);
  }

  double y(int row) const { return y_[row]; }
  void add_dy(int row, double g) { dy_[row] += g; }

  void backprop() {
    if (refs_.empty()) return;
    const int dim = model_.config.dim;
    Matrix dx = model_.module_of(kind_).backward(cache_, dy_);
    for (std::size_t i = 0; i < refs_.size(); ++i) {
      z_scatter(model_, refs_[i].first, dx.row(static_cast<Index>(i)).head(dim));
      z_scatter(model_, refs_[i].second, dx.row(static_cast<Index>(i)).tail(dim));
    }
  }

  bool empty() const { return refs_.empty(); }

 private:
  FuzzyModel& model_;
  ModuleKind kind_;
  std::vector<std::pair<ZRef, ZRef>> refs_;
  MlpCache cache_;
  Vector y_, dy_;
};

int z_size(const FuzzyModel& model, const ZSets& sets, int feature) {
  return model.features[static_cast<std::size_t>(feature)].cardinality() +
         static_cast<int>(sets.le_nodes[static_cast<std::size_t>(feature)].size() +
                          sets.ge_nodes[static_cast<std::size_t>(feature)].size());
}

ZRef sample_z(const FuzzyModel& model, const ZSets& sets, int feature, Rng& rng) {
  const int bins = model.features[static_cast<std::size_t>(feature)].cardinality();
  const auto& le_nodes = sets.le_nodes[static_cast<std::size_t>(feature)];
  const auto& ge_nodes = sets.ge_nodes[static_cast<std::size_t>(feature)];
  const int total = bins + static_cast<int>(le_nodes.size() + ge_nodes.size());
  int pick = rng.uniform_int(0, total - 1);
  ZRef ref;
  ref.feature = feature;
  if (pick < bins) {
    ref.index = pick;
    return ref;
  }
  pick -= bins;
  ref.is_threshold = true;
  ref.index = pick < static_cast<int>(le_nodes.size())
                  ? le_nodes[static_cast<std::size_t>(pick)]
                  : ge_nodes[static_cast<std::size_t>(pick - le_nodes.size())];
  return ref;
}

double ranking_target(int bin_a, int bin_b, int h, bool ge_mirror) {
  const double diff = std::abs(bin_a - bin_b);
  const double shift = diff * 0.5 / static_cast<double>(h - 1);
  const bool high = ge_mirror ? bin_a > bin_b : bin_a <= bin_b;
  if (diff == 0) return 0.5;
  return high ? 0.5 + shift : 0.5 - shift;
}

}  // namespace

ZSets collect_zsets(const FuzzyModel& model) {
  ZSets sets;
  const std::size_t f_count = model.features.size();
  sets.le_nodes.resize(f_count);
  sets.ge_nodes.resize(f_count);
  sets.be_nodes.resize(f_count);
  for (std::size_t n = 0; n < model.nodes.size(); ++n) {
    const FuzzyNode& fn = model.nodes[n];
    auto& bucket = fn.module == ModuleKind::le
                       ? sets.le_nodes
                       : (fn.module == ModuleKind::ge ? sets.ge_nodes : sets.be_nodes);
    bucket[static_cast<std::size_t>(fn.feature)].push_back(static_cast<int>(n));
  }
  for (std::size_t f = 0; f < f_count; ++f) {
    const FeatureSpec& spec = model.features[f];
    if (spec.kind == FeatureKind::numerical && !spec.degenerate && spec.cardinality() >= 2)
      sets.numeric_features.push_back(static_cast<int>(f));
    if (spec.kind == FeatureKind::categorical && !sets.be_nodes[f].empty())
      sets.categorical_features.push_back(static_cast<int>(f));
  }
  return sets;
}

// ---------------------------------------------------------------------------
// plan construction (gates frozen here)
// ---------------------------------------------------------------------------

namespace {

std::vector<TransSample> plan_transitivity(const FuzzyModel& model, const ZSets& sets,
                                           ModuleKind kind, int k, Rng& rng) {
  std::vector<TransSample> out;
  if (sets.numeric_features.empty()) return out;
  const OperatorMlp& module = model.module_of(kind);
  const int dim = model.config.dim;
  Matrix X(3, 2 * dim);
  for (int i = 0; i < k; ++i) {
    const int f = sets.numeric_features[static_cast<std::size_t>(
        rng.uniform_int(0, static_cast<int>(sets.numeric_features.size()) - 1))];
    TransSample s;
    s.a = sample_z(model, sets, f, rng);
    s.b = sample_z(model, sets, f, rng);
    s.c = sample_z(model, sets, f, rng);
    X.row(0).head(dim) = z_row(model, s.a);
    X.row(0).tail(dim) = z_row(model, s.b);
    X.row(1).head(dim) = z_row(model, s.b);
    X.row(1).tail(dim) = z_row(model, s.c);
    X.row(2).head(dim) = z_row(model, s.a);
    X.row(2).tail(dim) = z_row(model, s.c);
    const Vector y = module.forward(X);
    const double ab = y[0], bc = y[1], ac = y[2];
    // step(x) = 1 for x >= 0
    s.gate1 = ab >= 0.5 && bc >= 0.5;
    s.branch1 = ab >= bc ? 0 : 1;
    s.active1 = std::max(ab, bc) - ac > 0;
    s.gate2 = 0.5 - ab >= 0.0 && 0.5 - bc >= 0.0;
    s.branch2 = ab <= bc ? 0 : 1;
    s.active2 = ac - std::min(ab, bc) > 0;
    out.push_back(s);
  }
  return out;
}

std::vector<MonoSample> plan_monotonicity(const FuzzyModel& model, const ZSets& sets,
                                          ModuleKind kind, int k, Rng& rng) {
  std::vector<MonoSample> out;
  std::vector<int> nodes;
  const auto& buckets = kind == ModuleKind::le ? sets.le_nodes : sets.ge_nodes;
  for (int f : sets.numeric_features)
    for (int n : buckets[static_cast<std::size_t>(f)]) nodes.push_back(n);
  if (nodes.empty()) return out;
  const OperatorMlp& module = model.module_of(kind);
  const int dim = model.config.dim;
  for (int i = 0; i < k; ++i) {
    const int node = nodes[static_cast<std::size_t>(
        rng.uniform_int(0, static_cast<int>(nodes.size()) - 1))];
    const int f = model.nodes[static_cast<std::size_t>(node)].feature;
    const int h = model.features[static_cast<std::size_t>(f)].cardinality();
    if (h < 2) continue;
    MonoSample s;
    s.node = node;
    s.upper = rng.uniform_int(0, h - 2);
    s.lower = rng.uniform_int(s.upper + 1, h - 1);
    const int width = s.lower - s.upper + 1;
    Matrix X(width, 2 * dim);
    const Tensor& emb = model.embeddings[static_cast<std::size_t>(f)];
    for (int c = 0; c < width; ++c) {
      X.row(c).head(dim) = emb.value.row(s.upper + c);
      X.row(c).tail(dim) = model.thresholds.value.row(node);
    }
    const Vector y = module.forward(X);
    const bool increasing = kind == ModuleKind::ge;
    for (int c = s.upper + 1; c <= s.lower; ++c) {
      const double diff = increasing ? y[0] - y[c - s.upper] : y[c - s.upper] - y[0];
      s.active_vs_upper.push_back(diff > 0 ? 1 : 0);
    }
    for (int c = s.upper; c < s.lower; ++c) {
      const double diff = increasing ? y[c - s.upper] - y[width - 1] : y[width - 1] - y[c - s.upper];
      s.active_vs_lower.push_back(diff > 0 ? 1 : 0);
    }
    out.push_back(std::move(s));
  }
  return out;
}

std::vector<ConsSample> plan_consistency(const FuzzyModel& model, const ZSets& sets,
                                         ModuleKind kind, int k, Rng& rng) {
  std::vector<ConsSample> out;
  std::vector<int> nodes;
  const auto& buckets = kind == ModuleKind::le ? sets.le_nodes : sets.ge_nodes;
  for (int f : sets.numeric_features)
    for (int n : buckets[static_cast<std::size_t>(f)]) nodes.push_back(n);
  if (nodes.empty()) return out;
  const OperatorMlp& module = model.module_of(kind);
  const int dim = model.config.dim;
  for (int i = 0; i < k; ++i) {
    const int node = nodes[static_cast<std::size_t>(
        rng.uniform_int(0, static_cast<int>(nodes.size()) - 1))];
    const int f = model.nodes[static_cast<std::size_t>(node)].feature;
    const int h = model.features[static_cast<std::size_t>(f)].cardinality();
    const Tensor& emb = model.embeddings[static_cast<std::size_t>(f)];
    Matrix X(h, 2 * dim);
    for (int j = 0; j < h; ++j) {
      X.row(j).head(dim) = emb.value.row(j);
      X.row(j).tail(dim) = model.thresholds.value.row(node);
    }
    const Vector y = module.forward(X);
    ConsSample s;
    s.node = node;
    s.decoded = 0;
    for (int j = 1; j < h; ++j)
      if (std::abs(y[j] - 0.5) < std::abs(y[s.decoded] - 0.5)) s.decoded = j;
    const bool flipped = kind == ModuleKind::ge;
    for (int j = 0; j < s.decoded; ++j) {
      const double diff = flipped ? y[j] - y[s.decoded] : y[s.decoded] - y[j];
      s.active_below.push_back(diff > 0 ? 1 : 0);
    }
    for (int j = s.decoded + 1; j < h; ++j) {
      const double diff = flipped ? y[s.decoded] - y[j] : y[j] - y[s.decoded];
      s.active_above.push_back(diff > 0 ? 1 : 0);
    }
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace

RegPlan make_reg_plan(const FuzzyModel& model, const RegularizerConfig& config,
                      std::uint64_t seed) {
  RegPlan plan;
  const ZSets sets = collect_zsets(model);
  plan.ge_suite = model.config.variant == Variant::gnsdt && model.ge.initialized();
  plan.no_numerical_features = sets.numeric_features.empty();
  const int k = config.samples_per_loss;

  auto pick_feature = [&](Rng& rng) {
    return sets.numeric_features[static_cast<std::size_t>(
        rng.uniform_int(0, static_cast<int>(sets.numeric_features.size()) - 1))];
  };

  if (config.reflexivity && !sets.numeric_features.empty()) {
    Rng rng = stream_rng(seed, 0);
    for (int i = 0; i < k; ++i)
      plan.ref_samples.push_back(sample_z(model, sets, pick_feature(rng), rng));
  }
  if (config.antisymmetry && !sets.numeric_features.empty()) {
    Rng rng = stream_rng(seed, 1);
    for (int i = 0; i < k; ++i) {
      const int f = pick_feature(rng);
      plan.anti_samples.emplace_back(sample_z(model, sets, f, rng),
                                     sample_z(model, sets, f, rng));
    }
  }
  if (config.transitivity && !sets.numeric_features.empty()) {
    Rng rng = stream_rng(seed, 2);
    plan.trans_samples = plan_transitivity(model, sets, ModuleKind::le, k, rng);
  }
  if (config.ranking && !sets.numeric_features.empty()) {
    Rng rng = stream_rng(seed, 3);
    for (int i = 0; i < k; ++i) {
      const int f = pick_feature(rng);
      const int h = model.features[static_cast<std::size_t>(f)].cardinality();
      RankSample s;
      s.feature = f;
      s.bin_a = rng.uniform_int(0, h - 1);
      s.bin_b = rng.uniform_int(0, h - 1);
      s.target = ranking_target(s.bin_a, s.bin_b, h, false);
      plan.rank_samples.push_back(s);
    }
  }
  if (config.monotonicity) {
    Rng rng = stream_rng(seed, 4);
    plan.mono_samples = plan_monotonicity(model, sets, ModuleKind::le, k, rng);
  }
  if (config.consistency) {
    Rng rng = stream_rng(seed, 5);
    plan.cons_samples = plan_consistency(model, sets, ModuleKind::le, k, rng);
  }
  if (config.inclusiveness) {
    // full enumeration: every (level, threshold) pair on categorical features
    const int dim = model.config.dim;
    for (int f : sets.categorical_features) {
      const int levels = model.features[static_cast<std::size_t>(f)].cardinality();
      for (int node : sets.be_nodes[static_cast<std::size_t>(f)]) {
        Matrix X(levels, 2 * dim);
        const Tensor& emb = model.embeddings[static_cast<std::size_t>(f)];
        for (int j = 0; j < levels; ++j) {
          X.row(j).head(dim) = emb.value.row(j);
          X.row(j).tail(dim) = model.thresholds.value.row(node);
        }
        const Vector y = model.be.forward(X);
        for (int j = 0; j < levels; ++j) {
          InclusivePair p;
          p.node = node;
          p.level = j;
          p.lower_branch = y[j] <= 0.5;
          plan.incl_pairs.push_back(p);
        }
      }
    }
  }

  if (plan.ge_suite && !sets.numeric_features.empty()) {
    if (config.antisymmetry) {
      Rng rng = stream_rng(seed, 6);
      for (int i = 0; i < k; ++i) {
        const int f = pick_feature(rng);
        plan.ge_anti_samples.emplace_back(sample_z(model, sets, f, rng),
                                          sample_z(model, sets, f, rng));
      }
    }
    if (config.transitivity) {
      Rng rng = stream_rng(seed, 7);
      plan.ge_trans_samples = plan_transitivity(model, sets, ModuleKind::ge, k, rng);
    }
    if (config.ranking) {
      Rng rng = stream_rng(seed, 8);
      for (int i = 0; i < k; ++i) {
        const int f = pick_feature(rng);
        const int h = model.features[static_cast<std::size_t>(f)].cardinality();
        RankSample s;
        s.feature = f;
        s.bin_a = rng.uniform_int(0, h - 1);
        s.bin_b = rng.uniform_int(0, h - 1);
        s.target = ranking_target(s.bin_a, s.bin_b, h, true);
        plan.ge_rank_samples.push_back(s);
      }
    }
    if (config.monotonicity) {
      Rng rng = stream_rng(seed, 9);
      plan.ge_mono_samples = plan_monotonicity(model, sets, ModuleKind::ge, k, rng);
    }
    if (config.consistency) {
      Rng rng = stream_rng(seed, 10);
      plan.ge_cons_samples = plan_consistency(model, sets, ModuleKind::ge, k, rng);
    }
  }
  return plan;
}

// ---------------------------------------------------------------------------
// evaluation with frozen gates
// ---------------------------------------------------------------------------

namespace {

double eval_reflexivity(FuzzyModel& model, const std::vector<ZRef>& samples, double scale) {
  if (samples.empty()) return 0.0;
  PairBatch batch(model, ModuleKind::le);
  for (const ZRef& a : samples) batch.add(a, a);
  batch.forward();
  const double inv = 1.0 / static_cast<double>(samples.size());
  double loss = 0.0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const double y = batch.y(static_cast<int>(i));
    loss += std::abs(y - 0.5) * inv;
    if (scale != 0.0) {
      const double sign = y >= 0.5 ? 1.0 : -1.0;
      batch.add_dy(static_cast<int>(i), sign * inv * scale);
    }
  }
  if (scale != 0.0) batch.backprop();
  return loss;
}

double eval_antisymmetry(FuzzyModel& model, ModuleKind kind,
                         const std::vector<std::pair<ZRef, ZRef>>& samples, double scale) {
  if (samples.empty()) return 0.0;
  PairBatch batch(model, kind);
  std::vector<std::pair<int, int>> rows;
  for (const auto& [a, b] : samples)
    rows.emplace_back(batch.add(a, b), batch.add(b, a));
  batch.forward();
  const double inv = 1.0 / static_cast<double>(samples.size());
  double loss = 0.0;
  for (const auto& [p, q] : rows) {
    const double v = batch.y(p) + batch.y(q) - 1.0;  // y_ab - (1 - y_ba)
    loss += std::abs(v) * inv;
    if (scale != 0.0) {
      const double sign = v >= 0.0 ? 1.0 : -1.0;
      batch.add_dy(p, sign * inv * scale);
      batch.add_dy(q, sign * inv * scale);
    }
  }
  if (scale != 0.0) batch.backprop();
  return loss;
}

double eval_transitivity(FuzzyModel& model, ModuleKind kind,
                         const std::vector<TransSample>& samples, double scale) {
  if (samples.empty()) return 0.0;
  PairBatch batch(model, kind);
  struct Rows { int ab, bc, ac; };
  std::vector<Rows> rows;
  for (const TransSample& s : samples)
    rows.push_back({batch.add(s.a, s.b), batch.add(s.b, s.c), batch.add(s.a, s.c)});
  batch.forward();
  const double inv = 1.0 / static_cast<double>(samples.size());
  double loss = 0.0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const TransSample& s = samples[i];
    const Rows& r = rows[i];
    if (s.gate1 && s.active1) {
      const int sel = s.branch1 == 0 ? r.ab : r.bc;
      loss += (batch.y(sel) - batch.y(r.ac)) * inv;
      if (scale != 0.0) {
        batch.add_dy(sel, inv * scale);
        batch.add_dy(r.ac, -inv * scale);
      }
    }
    if (s.gate2 && s.active2) {
      const int sel = s.branch2 == 0 ? r.ab : r.bc;
      loss += (batch.y(r.ac) - batch.y(sel)) * inv;
      if (scale != 0.0) {
        batch.add_dy(r.ac, inv * scale);
        batch.add_dy(sel, -inv * scale);
      }
    }
  }
  if (scale != 0.0) batch.backprop();
  return loss;
}

double eval_ranking(FuzzyModel& model, ModuleKind kind, const std::vector<RankSample>& samples,
                    double scale) {
  if (samples.empty()) return 0.0;
  PairBatch batch(model, kind);
  for (const RankSample& s : samples) {
    ZRef a{s.feature, false, s.bin_a};
    ZRef b{s.feature, false, s.bin_b};
    batch.add(a, b);
  }
  batch.forward();
  const double inv = 1.0 / static_cast<double>(samples.size());
  double loss = 0.0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const double v = batch.y(static_cast<int>(i)) - samples[i].target;
    loss += std::abs(v) * inv;
    if (scale != 0.0)
      batch.add_dy(static_cast<int>(i), (v >= 0.0 ? 1.0 : -1.0) * inv * scale);
  }
  if (scale != 0.0) batch.backprop();
  return loss;
}

double eval_monotonicity(FuzzyModel& model, ModuleKind kind,
                         const std::vector<MonoSample>& samples, double scale) {
  if (samples.empty()) return 0.0;
  PairBatch batch(model, kind);
  std::vector<int> first_row(samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const MonoSample& s = samples[i];
    const int f = model.nodes[static_cast<std::size_t>(s.node)].feature;
    ZRef t{f, true, s.node};
    bool first = true;
    for (int c = s.upper; c <= s.lower; ++c) {
      ZRef a{f, false, c};
      const int row = batch.add(a, t);
      if (first) {
        first_row[i] = row;
        first = false;
      }
    }
  }
  batch.forward();
  const double inv = 1.0 / static_cast<double>(samples.size());
  const bool increasing = kind == ModuleKind::ge;
  double loss = 0.0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const MonoSample& s = samples[i];
    const int base = first_row[i];
    const int width = s.lower - s.upper + 1;
    const int row_u = base, row_l = base + width - 1;
    // no interior output may beat the sampled upper end
    for (int c = 1; c < width; ++c) {
      if (!s.active_vs_upper[static_cast<std::size_t>(c - 1)]) continue;
      const double diff = increasing ? batch.y(row_u) - batch.y(base + c)
                                     : batch.y(base + c) - batch.y(row_u);
      loss += diff * inv;
      if (scale != 0.0) {
        const double g = inv * scale;
        if (increasing) {
          batch.add_dy(row_u, g);
          batch.add_dy(base + c, -g);
        } else {
          batch.add_dy(base + c, g);
          batch.add_dy(row_u, -g);
        }
      }
    }
    // nor fall below the sampled lower end
    for (int c = 0; c < width - 1; ++c) {
      if (!s.active_vs_lower[static_cast<std::size_t>(c)]) continue;
      const double diff = increasing ? batch.y(base + c) - batch.y(row_l)
                                     : batch.y(row_l) - batch.y(base + c);
      loss += diff * inv;
      if (scale != 0.0) {
        const double g = inv * scale;
        if (increasing) {
          batch.add_dy(base + c, g);
          batch.add_dy(row_l, -g);
        } else {
          batch.add_dy(row_l, g);
          batch.add_dy(base + c, -g);
        }
      }
    }
  }
  if (scale != 0.0) batch.backprop();
  return loss;
}

double eval_consistency(FuzzyModel& model, ModuleKind kind,
                        const std::vector<ConsSample>& samples, double scale) {
  if (samples.empty()) return 0.0;
  PairBatch batch(model, kind);
  std::vector<int> first_row(samples.size());
  std::vector<int> widths(samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const ConsSample& s = samples[i];
    const int f = model.nodes[static_cast<std::size_t>(s.node)].feature;
    const int h = model.features[static_cast<std::size_t>(f)].cardinality();
    widths[i] = h;
    ZRef t{f, true, s.node};
    for (int j = 0; j < h; ++j) {
      ZRef a{f, false, j};
      const int row = batch.add(a, t);
      if (j == 0) first_row[i] = row;
    }
  }
  batch.forward();
  const double inv = 1.0 / static_cast<double>(samples.size());
  const bool flipped = kind == ModuleKind::ge;
  double loss = 0.0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const ConsSample& s = samples[i];
    const int base = first_row[i];
    const int row_d = base + s.decoded;
    for (int j = 0; j < s.decoded; ++j) {
      if (!s.active_below[static_cast<std::size_t>(j)]) continue;
      const double diff = flipped ? batch.y(base + j) - batch.y(row_d)
                                  : batch.y(row_d) - batch.y(base + j);
      loss += diff * inv;
      if (scale != 0.0) {
        const double g = inv * scale;
        if (flipped) {
          batch.add_dy(base + j, g);
          batch.add_dy(row_d, -g);
        } else {
          batch.add_dy(row_d, g);
          batch.add_dy(base + j, -g);
        }
      }
    }
    for (int j = s.decoded + 1; j < widths[i]; ++j) {
      if (!s.active_above[static_cast<std::size_t>(j - s.decoded - 1)]) continue;
      const double diff = flipped ? batch.y(row_d) - batch.y(base + j)
                                  : batch.y(base + j) - batch.y(row_d);
      loss += diff * inv;
      if (scale != 0.0) {
        const double g = inv * scale;
        if (flipped) {
          batch.add_dy(row_d, g);
          batch.add_dy(base + j, -g);
        } else {
          batch.add_dy(base + j, g);
          batch.add_dy(row_d, -g);
        }
      }
    }
  }
  if (scale != 0.0) batch.backprop();
  return loss;
}

double eval_inclusiveness(FuzzyModel& model, const std::vector<InclusivePair>& pairs,
                          double scale) {
  if (pairs.empty()) return 0.0;
  PairBatch batch(model, ModuleKind::be);
  for (const InclusivePair& p : pairs) {
    const int f = model.nodes[static_cast<std::size_t>(p.node)].feature;
    ZRef s{f, false, p.level};
    ZRef t{f, true, p.node};
    batch.add(s, t);
  }
  batch.forward();
  const double inv = 1.0 / static_cast<double>(pairs.size());
  double loss = 0.0;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const double y = batch.y(static_cast<int>(i));
    if (pairs[i].lower_branch) {
      loss += y * inv;
      if (scale != 0.0) batch.add_dy(static_cast<int>(i), inv * scale);
    } else {
      loss += (1.0 - y) * inv;
      if (scale != 0.0) batch.add_dy(static_cast<int>(i), -inv * scale);
    }
  }
  if (scale != 0.0) batch.backprop();
  return loss;
}

}  // namespace

RegBreakdown eval_regularizers(FuzzyModel& model, const RegularizerConfig& config,
                               const RegPlan& plan, double grad_scale) {
  RegBreakdown out;
  if (config.reflexivity)
    out.reflexivity = eval_reflexivity(model, plan.ref_samples, grad_scale);
  if (config.antisymmetry)
    out.antisymmetry = eval_antisymmetry(model, ModuleKind::le, plan.anti_samples, grad_scale);
  if (config.transitivity)
    out.transitivity = eval_transitivity(model, ModuleKind::le, plan.trans_samples, grad_scale);
  if (config.ranking)
    out.ranking = eval_ranking(model, ModuleKind::le, plan.rank_samples, grad_scale);
  if (config.monotonicity)
    out.monotonicity = eval_monotonicity(model, ModuleKind::le, plan.mono_samples, grad_scale);
  if (config.consistency)
    out.consistency = eval_consistency(model, ModuleKind::le, plan.cons_samples, grad_scale);
  if (config.inclusiveness)
    out.inclusiveness = eval_inclusiveness(model, plan.incl_pairs, grad_scale);
  if (plan.ge_suite) {
    if (config.antisymmetry)
      out.ge_antisymmetry =
          eval_antisymmetry(model, ModuleKind::ge, plan.ge_anti_samples, grad_scale);
    if (config.transitivity)
      out.ge_transitivity =
          eval_transitivity(model, ModuleKind::ge, plan.ge_trans_samples, grad_scale);
    if (config.ranking)
      out.ge_ranking = eval_ranking(model, ModuleKind::ge, plan.ge_rank_samples, grad_scale);
    if (config.monotonicity)
      out.ge_monotonicity =
          eval_monotonicity(model, ModuleKind::ge, plan.ge_mono_samples, grad_scale);
    if (config.consistency)
      out.ge_consistency =
          eval_consistency(model, ModuleKind::ge, plan.ge_cons_samples, grad_scale);
  }
  return out;
}

}  // namespace nsdt
