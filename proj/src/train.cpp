#include "nsdt/train.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <limits>

namespace nsdt {

// ---------------------------------------------------------------------------
// metrics + imbalance handling
// ---------------------------------------------------------------------------

Metrics metrics_from_predictions(const std::vector<int>& pred, const IntVector& target,
                                 const std::vector<Index>& rows) {
  Metrics m;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const int y = target[rows[i]];
    const int p = pred[i];
    if (y == 1)
      p == 1 ? ++m.tp : ++m.fn;
    else
      p == 0 ? ++m.tn : ++m.fp;
  }
  const double pos = static_cast<double>(m.tp + m.fn);
  const double neg = static_cast<double>(m.tn + m.fp);
  const double sens = pos > 0 ? m.tp / pos : 0.0;
  const double spec = neg > 0 ? m.tn / neg : 0.0;
  m.balanced_accuracy = 0.5 * (sens + spec);
  const double n = pos + neg;
  m.accuracy = n > 0 ? (m.tp + m.tn) / n : 0.0;
  return m;
}

Metrics evaluate_split(const FuzzyModel& model, const EncodedDataset& data, SplitTag tag) {
  const std::vector<Index> rows = data.rows_with(tag);
  const NodeTables tables = node_tables(model);
  const Matrix r = batch_rule_outputs(model, tables, data.codes, rows);
  const Matrix logits = batch_logits(model, r);
  std::vector<int> pred(rows.size());
  for (Index i = 0; i < logits.rows(); ++i) pred[static_cast<std::size_t>(i)] =
      logits(i, 1) > logits(i, 0) ? 1 : 0;
  return metrics_from_predictions(pred, data.target, rows);
}

Vector class_weight_vector(const IntVector& target, const std::vector<Index>& rows) {
  Index n_pos = 0;
  for (Index r : rows) n_pos += target[r] == 1 ? 1 : 0;
  const Index n = static_cast<Index>(rows.size());
  const Index n_neg = n - n_pos;
  if (n_pos == 0 || n_neg == 0)
    throw NsdtError("class_weight_vector: a class is absent from the training split");
  const double w_pos = static_cast<double>(n) / (2.0 * static_cast<double>(n_pos));
  const double w_neg = static_cast<double>(n) / (2.0 * static_cast<double>(n_neg));
  Vector w(n);
  for (Index i = 0; i < n; ++i) w[i] = target[rows[static_cast<std::size_t>(i)]] == 1 ? w_pos : w_neg;
  return w;
}

std::vector<Index> oversample_rows(const IntVector& target, const std::vector<Index>& rows,
                                   std::uint64_t seed) {
  std::vector<Index> pos, neg;
  for (Index r : rows) (target[r] == 1 ? pos : neg).push_back(r);
  if (pos.empty() || neg.empty())
    throw NsdtError("oversample_rows: a class is absent from the training split");
  std::vector<Index>& minority = pos.size() < neg.size() ? pos : neg;
  const std::size_t majority_n = std::max(pos.size(), neg.size());
  std::vector<Index> out = rows;
  const std::size_t copies = majority_n / minority.size() - 1;
  for (std::size_t c = 0; c < copies; ++c)
    out.insert(out.end(), minority.begin(), minority.end());
  const std::size_t remainder = majority_n - minority.size() * (copies + 1);
  Rng rng(seed);
  std::vector<int> extra = rng.sample_without_replacement(
      static_cast<int>(minority.size()), static_cast<int>(remainder));
  for (int e : extra) out.push_back(minority[static_cast<std::size_t>(e)]);
  return out;
}

// ---------------------------------------------------------------------------
// combined loss forward/backward over one batch
// ---------------------------------------------------------------------------

namespace {

struct BatchLoss {
  double target_loss = 0;
  double reg_total = 0;
  double l2_penalty = 0;
  RegBreakdown regs;
  double combined() const { return target_loss + reg_total + l2_penalty; }
};

double l2_penalty_value(const FuzzyModel& model, double l2) {
  if (l2 <= 0) return 0.0;
  double sum = 0;
  for (const Tensor* t : model.parameters()) sum += t->value.squaredNorm();
  return l2 * sum;
}

// forward-only combined loss with a frozen regularizer plan (no dropout)
BatchLoss loss_forward(FuzzyModel& model, const EncodedDataset& data,
                       const std::vector<Index>& rows, const Vector& weights,
                       const TrainConfig& config, const RegPlan* plan) {
  BatchLoss out;
  const NodeTables tables = node_tables(model);
  const Matrix r = batch_rule_outputs(model, tables, data.codes, rows);
  const Matrix logits = batch_logits(model, r);
  const Index n = logits.rows();
  for (Index i = 0; i < n; ++i) {
    const Eigen::Vector2d p = softmax2(logits.row(i).transpose());
    const int y = data.target[rows[static_cast<std::size_t>(i)]];
    out.target_loss += -weights[i] * std::log(std::max(p[y], 1e-300));
  }
  out.target_loss /= static_cast<double>(n);
  if (plan) {
    out.regs = eval_regularizers(model, config.reg, *plan, 0.0);
    out.reg_total = config.reg.alpha * out.regs.total();
  }
  out.l2_penalty = l2_penalty_value(model, config.l2);
  return out;
}

// forward + gradient accumulation; dropout active when rng provided
BatchLoss loss_backward(FuzzyModel& model, const EncodedDataset& data,
                        const std::vector<Index>& rows, const Vector& weights,
                        const TrainConfig& config, const RegPlan* plan, Rng* dropout_rng) {
  BatchLoss out;
  const double dropout = dropout_rng ? config.dropout : 0.0;
  NodeTables tables = node_tables(model, dropout, dropout_rng);
  const Matrix r = batch_rule_outputs(model, tables, data.codes, rows);
  const Matrix logits = batch_logits(model, r);
  const Index n = logits.rows();
  const Index L = model.rule_count();

  Matrix dlogits(n, 2);
  for (Index i = 0; i < n; ++i) {
    const Eigen::Vector2d p = softmax2(logits.row(i).transpose());
    const int y = data.target[rows[static_cast<std::size_t>(i)]];
    out.target_loss += -weights[i] * std::log(std::max(p[y], 1e-300));
    dlogits(i, 0) = weights[i] * (p[0] - (y == 0 ? 1.0 : 0.0)) / static_cast<double>(n);
    dlogits(i, 1) = weights[i] * (p[1] - (y == 1 ? 1.0 : 0.0)) / static_cast<double>(n);
  }
  out.target_loss /= static_cast<double>(n);

  model.head_w.grad += r.transpose() * dlogits;
  model.head_b.grad.row(0) += dlogits.colwise().sum();
  const Matrix dr = dlogits * model.head_w.value.transpose();  // n x L

  // product rule per (sample, rule) via prefix/suffix products
  std::vector<Vector> dtable(static_cast<std::size_t>(model.node_count()));
  for (std::size_t t = 0; t < dtable.size(); ++t)
    dtable[t] = Vector::Zero(tables.out[t].size());
  std::vector<double> vals, prefix, suffix;
  std::vector<int> slot_node, slot_code;
  std::vector<bool> slot_comp;
  for (Index i = 0; i < n; ++i) {
    const Index row = rows[static_cast<std::size_t>(i)];
    for (Index rule = 0; rule < L; ++rule) {
      const double upstream = dr(i, rule);
      if (upstream == 0.0) continue;
      vals.clear();
      slot_node.clear();
      slot_code.clear();
      slot_comp.clear();
      for (const SlotRef& ref : model.slots[static_cast<std::size_t>(rule)]) {
        if (ref.padding) continue;
        const FuzzyNode& fn = model.nodes[static_cast<std::size_t>(ref.node)];
        const int code = data.codes(row, fn.feature);
        const double raw = tables.out[static_cast<std::size_t>(ref.node)][code];
        vals.push_back(ref.complement ? 1.0 - raw : raw);
        slot_node.push_back(ref.node);
        slot_code.push_back(code);
        slot_comp.push_back(ref.complement);
      }
      const std::size_t k = vals.size();
      if (k == 0) continue;
      prefix.assign(k + 1, 1.0);
      suffix.assign(k + 1, 1.0);
      for (std::size_t s = 0; s < k; ++s) prefix[s + 1] = prefix[s] * vals[s];
      for (std::size_t s = k; s-- > 0;) suffix[s] = suffix[s + 1] * vals[s];
      for (std::size_t s = 0; s < k; ++s) {
        const double d_slot = upstream * prefix[s] * suffix[s + 1];
        dtable[static_cast<std::size_t>(slot_node[s])][slot_code[s]] +=
            slot_comp[s] ? -d_slot : d_slot;
      }
    }
  }

  const int dim = model.config.dim;
  for (Index node = 0; node < model.node_count(); ++node) {
    const std::size_t t = static_cast<std::size_t>(node);
    if (dtable[t].isZero(0.0)) continue;
    const FuzzyNode& fn = model.nodes[t];
    const Matrix dx =
        model.module_of(fn.module).backward(tables.cache[t], dtable[t]);
    model.embeddings[static_cast<std::size_t>(fn.feature)].grad += dx.leftCols(dim);
    model.thresholds.grad.row(node) += dx.rightCols(dim).colwise().sum();
  }

  if (plan) {
    out.regs = eval_regularizers(model, config.reg, *plan, config.reg.alpha);
    out.reg_total = config.reg.alpha * out.regs.total();
  }
  if (config.l2 > 0) {
    for (Tensor* t : model.parameters()) {
      out.l2_penalty += config.l2 * t->value.squaredNorm();
      t->grad += 2.0 * config.l2 * t->value;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// optimizers
// ---------------------------------------------------------------------------

class Optimizer {
 public:
  Optimizer(OptimKind kind, std::vector<Tensor*> params, double lr, double momentum)
      : kind_(kind), params_(std::move(params)), lr_(lr), momentum_(momentum) {
    m_.reserve(params_.size());
    v_.reserve(params_.size());
    for (Tensor* t : params_) {
      m_.push_back(Matrix::Zero(t->value.rows(), t->value.cols()));
      v_.push_back(Matrix::Zero(t->value.rows(), t->value.cols()));
    }
  }

  void step() {
    ++t_;
    if (kind_ == OptimKind::adam) {
      const double b1 = 0.9, b2 = 0.999, eps = 1e-8;
      const double bc1 = 1.0 - std::pow(b1, t_);
      const double bc2 = 1.0 - std::pow(b2, t_);
      for (std::size_t i = 0; i < params_.size(); ++i) {
        Tensor* p = params_[i];
        m_[i] = b1 * m_[i] + (1.0 - b1) * p->grad;
        v_[i] = b2 * v_[i] + (1.0 - b2) * p->grad.cwiseProduct(p->grad);
        const Matrix m_hat = m_[i] / bc1;
        const Matrix v_hat = v_[i] / bc2;
        p->value -=
            lr_ * (m_hat.array() / (v_hat.array().sqrt() + eps)).matrix();
      }
    } else {
      for (std::size_t i = 0; i < params_.size(); ++i) {
        Tensor* p = params_[i];
        m_[i] = momentum_ * m_[i] + p->grad;
        p->value -= lr_ * m_[i];
      }
    }
  }

 private:
  OptimKind kind_;
  std::vector<Tensor*> params_;
  double lr_, momentum_;
  std::vector<Matrix> m_, v_;
  double t_ = 0;
};

std::vector<Matrix> snapshot_values(const FuzzyModel& model) {
  std::vector<Matrix> out;
  for (const Tensor* t : model.parameters()) out.push_back(t->value);
  return out;
}

void restore_values(FuzzyModel& model, const std::vector<Matrix>& snap) {
  std::vector<Tensor*> params = model.parameters();
  for (std::size_t i = 0; i < params.size(); ++i) params[i]->value = snap[i];
}

}  // namespace

// ---------------------------------------------------------------------------
// train
// ---------------------------------------------------------------------------

TrainHistory train(FuzzyModel& model, const EncodedDataset& data, const TrainConfig& config) {
  TrainHistory history;
  std::vector<Index> train_rows = data.rows_with(kTrain);
  if (train_rows.empty()) throw NsdtError("train: empty training split");

  // independent streams: batch order must not depend on whether regularizers
  // or dropout consume randomness (ablation arms share byte-identical batches)
  Rng shuffle_rng(config.seed ^ 0xa076'1d64'78bd'642full);
  Rng plan_rng(config.seed ^ 0xe703'7ed1'a0b4'28dbull);
  Rng dropout_master(config.seed ^ 0x8ebc'6af0'9c88'c6e3ull);
  Rng imbalance_rng(config.seed ^ 0x5899'65cc'7537'4312ull);

  if (config.imbalance == ImbalanceMode::oversample) {
    train_rows = oversample_rows(data.target, train_rows, imbalance_rng.next_seed());
  }
  Vector weights_all = config.imbalance == ImbalanceMode::class_weights
                           ? class_weight_vector(data.target, train_rows)
                           : Vector::Ones(static_cast<Index>(train_rows.size()));

  const bool use_reg = config.reg.alpha > 0 && config.reg.any_enabled();
  Optimizer optimizer(config.optimizer, model.parameters(), config.learning_rate,
                      config.momentum);

  std::vector<Matrix> best_snapshot = snapshot_values(model);
  double best_valid = -1.0;
  int best_epoch = -1;
  long step_counter = 0;

  std::vector<std::size_t> order(train_rows.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  for (int epoch = 1; epoch <= config.max_epochs; ++epoch) {
    shuffle_rng.shuffle(order);
    double epoch_target = 0, epoch_reg = 0, epoch_l2 = 0;
    RegBreakdown epoch_regs;
    Index batches = 0;
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      const std::size_t stop = std::min(order.size(), start + config.batch_size);
      std::vector<Index> batch;
      Vector w(static_cast<Index>(stop - start));
      for (std::size_t i = start; i < stop; ++i) {
        batch.push_back(train_rows[order[i]]);
        w[static_cast<Index>(i - start)] = weights_all[static_cast<Index>(order[i])];
      }
      for (Index row : batch)
        history.batch_order_hash =
            (history.batch_order_hash ^ static_cast<std::uint64_t>(row)) * 0x100000001b3ull;
      model.zero_grads();
      RegPlan plan;
      if (use_reg) plan = make_reg_plan(model, config.reg, plan_rng.next_seed());
      Rng dropout_rng(dropout_master.next_seed());
      const BatchLoss loss =
          loss_backward(model, data, batch, w, config, use_reg ? &plan : nullptr,
                        config.dropout > 0 ? &dropout_rng : nullptr);
      ++step_counter;
      if (!std::isfinite(loss.combined())) {
        history.diverged = true;
        history.diverged_step = step_counter;
        restore_values(model, best_snapshot);
        return history;
      }
      optimizer.step();
      epoch_target += loss.target_loss;
      epoch_reg += loss.reg_total;
      epoch_l2 += loss.l2_penalty;
      epoch_regs.reflexivity += loss.regs.reflexivity;
      epoch_regs.antisymmetry += loss.regs.antisymmetry;
      epoch_regs.transitivity += loss.regs.transitivity;
      epoch_regs.ranking += loss.regs.ranking;
      epoch_regs.monotonicity += loss.regs.monotonicity;
      epoch_regs.consistency += loss.regs.consistency;
      epoch_regs.inclusiveness += loss.regs.inclusiveness;
      epoch_regs.ge_antisymmetry += loss.regs.ge_antisymmetry;
      epoch_regs.ge_transitivity += loss.regs.ge_transitivity;
      epoch_regs.ge_ranking += loss.regs.ge_ranking;
      epoch_regs.ge_monotonicity += loss.regs.ge_monotonicity;
      epoch_regs.ge_consistency += loss.regs.ge_consistency;
      ++batches;
    }
    const double inv_b = batches > 0 ? 1.0 / static_cast<double>(batches) : 0.0;

    EpochRecord rec;
    rec.epoch = epoch;
    rec.target_loss = epoch_target * inv_b;
    rec.reg_total = epoch_reg * inv_b;
    rec.l2_penalty = epoch_l2 * inv_b;
    rec.combined_loss = rec.target_loss + rec.reg_total + rec.l2_penalty;
    rec.regs = epoch_regs;
    rec.train_bacc = evaluate_split(model, data, kTrain).balanced_accuracy;
    rec.valid_bacc = evaluate_split(model, data, kValid).balanced_accuracy;
    history.epochs.push_back(rec);
    if (config.verbose)
      std::cout << "epoch " << epoch << " loss " << rec.combined_loss << " train "
                << rec.train_bacc << " valid " << rec.valid_bacc << "\n";

    if (rec.valid_bacc > best_valid) {
      best_valid = rec.valid_bacc;
      best_epoch = epoch;
      best_snapshot = snapshot_values(model);
    }
    if (epoch - best_epoch >= config.patience) break;
  }

  restore_values(model, best_snapshot);
  history.best_epoch = best_epoch;
  history.best_valid_bacc = best_valid;
  return history;
}

// ---------------------------------------------------------------------------
// gradient check
// ---------------------------------------------------------------------------

double gradient_check(FuzzyModel& model, const EncodedDataset& tiny_data,
                      const TrainConfig& config) {
  TrainConfig cfg = config;
  cfg.dropout = 0.0;

  std::vector<Index> rows = tiny_data.rows_with(kTrain);
  if (rows.empty())
    for (Index i = 0; i < tiny_data.rows(); ++i) rows.push_back(i);
  const Vector weights = Vector::Ones(static_cast<Index>(rows.size()));

  const bool use_reg = cfg.reg.alpha > 0 && cfg.reg.any_enabled();
  RegPlan plan;
  if (use_reg) plan = make_reg_plan(model, cfg.reg, cfg.seed);
  const RegPlan* plan_ptr = use_reg ? &plan : nullptr;

  model.zero_grads();
  loss_backward(model, tiny_data, rows, weights, cfg, plan_ptr, nullptr);

  std::vector<Tensor*> params = model.parameters();
  std::vector<Matrix> analytic;
  for (Tensor* t : params) analytic.push_back(t->grad);

  const double eps = 1e-4;
  double worst = 0.0;
  for (std::size_t p = 0; p < params.size(); ++p) {
    Matrix& value = params[p]->value;
    for (Index r = 0; r < value.rows(); ++r)
      for (Index c = 0; c < value.cols(); ++c) {
        const double saved = value(r, c);
        value(r, c) = saved + eps;
        const double plus =
            loss_forward(model, tiny_data, rows, weights, cfg, plan_ptr).combined();
        value(r, c) = saved - eps;
        const double minus =
            loss_forward(model, tiny_data, rows, weights, cfg, plan_ptr).combined();
        value(r, c) = saved;
        const double numeric = (plus - minus) / (2.0 * eps);
        const double a = analytic[p](r, c);
        if (!std::isfinite(numeric) || !std::isfinite(a))
          throw NsdtError("gradient_check: non-finite gradient at " + params[p]->name);
        const double denom = std::max({std::abs(a), std::abs(numeric), 1e-3});
        worst = std::max(worst, std::abs(a - numeric) / denom);
      }
  }
  return worst;
}

// ---------------------------------------------------------------------------
// seeded runs
// ---------------------------------------------------------------------------

SeededRuns run_seeded(const std::function<std::map<std::string, double>(std::uint64_t)>& fn,
                      const std::vector<std::uint64_t>& seeds, int repeats) {
  SeededRuns out;
  out.reduced_replication = seeds.size() < 5 || repeats < 5;
  for (std::uint64_t seed : seeds) {
    for (int rep = 0; rep < repeats; ++rep) {
      const std::uint64_t run_seed =
          seed ^ (0x9e3779b97f4a7c15ull * static_cast<std::uint64_t>(rep + 1));
      out.run_seeds.push_back(run_seed);
      out.runs.push_back(fn(run_seed));
    }
  }
  if (out.runs.empty()) return out;
  for (const auto& [key, _] : out.runs.front()) {
    double sum = 0;
    for (const auto& run : out.runs) sum += run.at(key);
    const double mean = sum / static_cast<double>(out.runs.size());
    double var = 0;
    for (const auto& run : out.runs) {
      const double d = run.at(key) - mean;
      var += d * d;
    }
    var /= static_cast<double>(out.runs.size());
    out.mean[key] = mean;
    out.stddev[key] = std::sqrt(var);
  }
  return out;
}

}  // namespace nsdt
