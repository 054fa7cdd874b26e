#pragma once

#include "nsdt/baselines.hpp"
#include "nsdt/common.hpp"
#include "nsdt/data.hpp"
#include "nsdt/decode.hpp"
#include "nsdt/model.hpp"
#include "nsdt/reference.hpp"
#include "nsdt/train.hpp"

#include <nlohmann/json.hpp>

#include <optional>
#include <string>
#include <vector>

namespace nsdt {

struct ExperimentManifest {
  std::string command;
  std::string dataset;
  std::string model = "gnsdt";  // nsdt, gnsdt, knn, dtree, rforest
  std::string config_path;      // optional JSON overrides
  std::vector<std::uint64_t> seeds{1, 2};
  int repeats = 1;
  Index subsample = 0;  // 0 = full scale
  std::string data_dir = "data/cache";
  std::string out_dir;
  std::vector<std::string> redact;
  std::string checkpoint;       // eval/explain input
  std::string reference_path;   // optional override of the builtin constants
  double noise_feature_fraction = 0.3;  // robustness; 0 = noiseless control

  nlohmann::json to_json() const;
  static ExperimentManifest from_json(const nlohmann::json& j);
};

// hyperparameters resolved from defaults + optional config file overrides
struct ResolvedConfig {
  EncodeConfig encode;
  TreeFitConfig tree;
  ModelConfig model;
  TrainConfig train;
  double decode_cut = 0.9;

  static ResolvedConfig load(const std::string& config_path);  // "" = defaults
  nlohmann::json to_json() const;
};

const PaperReference& reference_for(const ExperimentManifest& manifest);

// one fully deterministic run: subsample -> encode -> tree -> build -> train
struct RunResult {
  std::uint64_t seed = 0;
  Metrics test;
  Metrics tree_test;   // the adapted symbolic tree on the same split
  double valid_bacc = 0;
  TrainHistory history;
};

struct PipelineArtifacts {
  EncodedDataset encoded;
  SymbolicTree tree;
  PaddedRuleSet rules;
};

PipelineArtifacts run_pipeline_to_rules(const DataTable& cleaned, const std::string& dataset_id,
                                        const ResolvedConfig& config, Index subsample,
                                        std::uint64_t seed);

RunResult run_single_training(const DataTable& cleaned, const std::string& dataset_id,
                              const std::string& model_kind, const ResolvedConfig& config,
                              Index subsample, std::uint64_t seed,
                              FuzzyModel* trained_out = nullptr);

// loads + cleans + (insurance) binarizes from the cache directory
DataTable load_cleaned(const ExperimentManifest& manifest, CleanReport* report = nullptr);

// ---- command drivers; each writes manifest.json + reports under out_dir ----
nlohmann::json cmd_prepare(const ExperimentManifest& manifest);
nlohmann::json cmd_train(const ExperimentManifest& manifest);
nlohmann::json cmd_eval(const ExperimentManifest& manifest);
nlohmann::json cmd_ablate(const ExperimentManifest& manifest);
nlohmann::json cmd_robustness(const ExperimentManifest& manifest);
nlohmann::json cmd_explain(const ExperimentManifest& manifest);

// measured-vs-reference comparison row used by every emitted table
struct ComparisonRow {
  std::string label;
  double measured = 0;
  std::optional<double> reference;
  double tolerance = 0;
  std::string verdict;  // "within", "beyond", "n/a"
};

ComparisonRow compare_to_reference(const std::string& label, double measured,
                                   std::optional<double> reference, double tolerance);
std::string render_comparison_table(const std::vector<ComparisonRow>& rows);
nlohmann::json comparison_to_json(const std::vector<ComparisonRow>& rows);

void write_json_file(const std::string& path, const nlohmann::json& j);

}  // namespace nsdt
