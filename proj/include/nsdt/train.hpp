#pragma once

#include "nsdt/common.hpp"
#include "nsdt/data.hpp"
#include "nsdt/model.hpp"
#include "nsdt/regularizers.hpp"

#include <functional>
#include <map>
#include <string>
#include <vector>

namespace nsdt {

enum class ImbalanceMode { class_weights, oversample };
enum class OptimKind { adam, momentum };

struct TrainConfig {
  double learning_rate = 1e-3;
  int batch_size = 256;
  int max_epochs = 100;
  int patience = 10;
  double dropout = 0.1;
  double l2 = 1e-5;
  RegularizerConfig reg;  // carries alpha and per-loss toggles
  ImbalanceMode imbalance = ImbalanceMode::class_weights;
  OptimKind optimizer = OptimKind::adam;
  double momentum = 0.9;
  std::uint64_t seed = 0;
  bool verbose = false;
};

struct EpochRecord {
  int epoch = 0;
  double combined_loss = 0, target_loss = 0, reg_total = 0, l2_penalty = 0;
  RegBreakdown regs;
  double train_bacc = 0, valid_bacc = 0;
};

struct TrainHistory {
  std::vector<EpochRecord> epochs;
  int best_epoch = -1;
  double best_valid_bacc = 0;
  bool diverged = false;
  long diverged_step = -1;
  std::uint64_t batch_order_hash = 0xcbf29ce484222325ull;  // FNV over batch rows
};

struct Metrics {
  double balanced_accuracy = 0;
  double accuracy = 0;
  Index tp = 0, tn = 0, fp = 0, fn = 0;
};

Metrics evaluate_split(const FuzzyModel& model, const EncodedDataset& data, SplitTag tag);
Metrics metrics_from_predictions(const std::vector<int>& pred, const IntVector& target,
                                 const std::vector<Index>& rows);

// class_weights: per-sample weights proportional to inverse class frequency,
// normalized to mean 1 over the rows
Vector class_weight_vector(const IntVector& target, const std::vector<Index>& rows);
// oversample: index multiset with equalized class counts, deterministic
std::vector<Index> oversample_rows(const IntVector& target, const std::vector<Index>& rows,
                                   std::uint64_t seed);

// Mini-batch optimization of cross-entropy + alpha * regularizers + l2, with
// best-validation-balanced-accuracy parameters restored at the end.
TrainHistory train(FuzzyModel& model, const EncodedDataset& data, const TrainConfig& config);

// Analytic gradient of the combined loss vs central finite differences
// (step 1e-4) with all sampling gates frozen; returns the worst relative
// error. Dropout is disabled for the check.
double gradient_check(FuzzyModel& model, const EncodedDataset& tiny_data,
                      const TrainConfig& config);

struct SeededRuns {
  std::vector<std::map<std::string, double>> runs;
  std::vector<std::uint64_t> run_seeds;
  std::map<std::string, double> mean;
  std::map<std::string, double> stddev;
  bool reduced_replication = false;  // fewer than 5 seeds x 5 repeats
};

SeededRuns run_seeded(const std::function<std::map<std::string, double>(std::uint64_t)>& fn,
                      const std::vector<std::uint64_t>& seeds, int repeats);

}  // namespace nsdt
