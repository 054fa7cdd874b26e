#include "nsdt/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace nsdt {

namespace fs = std::filesystem;
using nlohmann::json;

// ---------------------------------------------------------------------------
// manifest + config
// ---------------------------------------------------------------------------

json ExperimentManifest::to_json() const {
  json j;
  j["command"] = command;
  j["dataset"] = dataset;
  j["model"] = model;
  j["config_path"] = config_path;
  j["seeds"] = seeds;
  j["repeats"] = repeats;
  j["subsample"] = subsample;
  j["data_dir"] = data_dir;
  j["out_dir"] = out_dir;
  j["redact"] = redact;
  j["checkpoint"] = checkpoint;
  j["reference_path"] = reference_path;
  j["noise_feature_fraction"] = noise_feature_fraction;
  return j;
}

ExperimentManifest ExperimentManifest::from_json(const json& j) {
  ExperimentManifest m;
  m.command = j.value("command", "");
  m.dataset = j.value("dataset", "");
  m.model = j.value("model", "gnsdt");
  m.config_path = j.value("config_path", "");
  m.seeds = j.value("seeds", std::vector<std::uint64_t>{1, 2});
  m.repeats = j.value("repeats", 1);
  m.subsample = j.value("subsample", Index{0});
  m.data_dir = j.value("data_dir", "data/cache");
  m.out_dir = j.value("out_dir", "");
  m.redact = j.value("redact", std::vector<std::string>{});
  m.checkpoint = j.value("checkpoint", "");
  m.reference_path = j.value("reference_path", "");
  m.noise_feature_fraction = j.value("noise_feature_fraction", 0.3);
  return m;
}

ResolvedConfig ResolvedConfig::load(const std::string& config_path) {
  ResolvedConfig cfg;
  if (config_path.empty()) return cfg;
  const json j = json::parse(read_text_file(config_path));
  if (j.contains("bin_count")) cfg.encode.bin_count = j["bin_count"].get<int>();
  if (j.contains("equal_width")) cfg.encode.equal_width = j["equal_width"].get<bool>();
  if (j.contains("max_depth")) cfg.tree.max_depth = j["max_depth"].get<int>();
  if (j.contains("min_leaf")) cfg.tree.min_leaf = j["min_leaf"].get<int>();
  if (j.contains("dim")) cfg.model.dim = j["dim"].get<int>();
  if (j.contains("hidden")) cfg.model.hidden = j["hidden"].get<std::vector<int>>();
  if (j.contains("embed_scale")) cfg.model.embed_scale = j["embed_scale"].get<double>();
  if (j.contains("learning_rate")) cfg.train.learning_rate = j["learning_rate"].get<double>();
  if (j.contains("batch_size")) cfg.train.batch_size = j["batch_size"].get<int>();
  if (j.contains("max_epochs")) cfg.train.max_epochs = j["max_epochs"].get<int>();
  if (j.contains("patience")) cfg.train.patience = j["patience"].get<int>();
  if (j.contains("dropout")) cfg.train.dropout = j["dropout"].get<double>();
  if (j.contains("l2")) cfg.train.l2 = j["l2"].get<double>();
  if (j.contains("alpha")) cfg.train.reg.alpha = j["alpha"].get<double>();
  if (j.contains("samples_per_loss"))
    cfg.train.reg.samples_per_loss = j["samples_per_loss"].get<int>();
  if (j.contains("oversample"))
    cfg.train.imbalance =
        j["oversample"].get<bool>() ? ImbalanceMode::oversample : ImbalanceMode::class_weights;
  if (j.contains("decode_cut")) cfg.decode_cut = j["decode_cut"].get<double>();
  return cfg;
}

json ResolvedConfig::to_json() const {
  json j;
  j["bin_count"] = encode.bin_count;
  j["equal_width"] = encode.equal_width;
  j["max_depth"] = tree.max_depth;
  j["min_leaf"] = tree.min_leaf;
  j["dim"] = model.dim;
  j["hidden"] = model.hidden;
  j["embed_scale"] = model.embed_scale;
  j["learning_rate"] = train.learning_rate;
  j["batch_size"] = train.batch_size;
  j["max_epochs"] = train.max_epochs;
  j["patience"] = train.patience;
  j["dropout"] = train.dropout;
  j["l2"] = train.l2;
  j["alpha"] = train.reg.alpha;
  j["samples_per_loss"] = train.reg.samples_per_loss;
  j["oversample"] = train.imbalance == ImbalanceMode::oversample;
  j["decode_cut"] = decode_cut;
  return j;
}

const PaperReference& reference_for(const ExperimentManifest& manifest) {
  if (manifest.reference_path.empty()) return PaperReference::builtin();
  static PaperReference loaded = PaperReference::from_file(manifest.reference_path);
  return loaded;
}

// ---------------------------------------------------------------------------
// comparison rows
// ---------------------------------------------------------------------------

ComparisonRow compare_to_reference(const std::string& label, double measured,
                                   std::optional<double> reference, double tolerance) {
  ComparisonRow row;
  row.label = label;
  row.measured = measured;
  row.reference = reference;
  row.tolerance = tolerance;
  if (!reference) {
    row.verdict = "n/a";
  } else {
    row.verdict = std::abs(measured - *reference) <= tolerance ? "within" : "beyond";
  }
  return row;
}

std::string render_comparison_table(const std::vector<ComparisonRow>& rows) {
  std::ostringstream out;
  out << std::left << std::setw(44) << "metric" << std::right << std::setw(10) << "measured"
      << std::setw(10) << "paper" << std::setw(8) << "tol" << "  verdict\n";
  for (const ComparisonRow& r : rows) {
    out << std::left << std::setw(44) << r.label << std::right << std::fixed
        << std::setprecision(4) << std::setw(10) << r.measured;
    if (r.reference)
      out << std::setw(10) << *r.reference;
    else
      out << std::setw(10) << "-";
    out << std::setw(8) << std::setprecision(3) << r.tolerance << "  " << r.verdict << "\n";
  }
  return out.str();
}

json comparison_to_json(const std::vector<ComparisonRow>& rows) {
  json out = json::array();
  for (const ComparisonRow& r : rows) {
    json j;
    j["label"] = r.label;
    j["measured"] = r.measured;
    if (r.reference)
      j["paper_reference"] = *r.reference;
    else
      j["paper_reference"] = nullptr;
    j["tolerance"] = r.tolerance;
    j["verdict"] = r.verdict;
    out.push_back(std::move(j));
  }
  return out;
}

void write_json_file(const std::string& path, const json& j) {
  fs::create_directories(fs::path(path).parent_path());
  write_text_file(path, j.dump(2) + "\n");
}

// ---------------------------------------------------------------------------
// pipeline pieces
// ---------------------------------------------------------------------------

DataTable load_cleaned(const ExperimentManifest& manifest, CleanReport* report) {
  DataTable table = load_and_clean(manifest.data_dir, manifest.dataset, report);
  if (dataset_schema(manifest.dataset).continuous_target) {
    const IntVector bin = binarize_top_decile(table.target);
    for (Index i = 0; i < table.target.size(); ++i) table.target[i] = bin[i];
  }
  return table;
}

PipelineArtifacts run_pipeline_to_rules(const DataTable& cleaned, const std::string& dataset_id,
                                        const ResolvedConfig& config, Index subsample,
                                        std::uint64_t seed) {
  PipelineArtifacts art;
  const DataTable working =
      subsample > 0 ? subsample_stratified(cleaned, subsample, seed ^ 0x9e3779b9ull) : cleaned;
  EncodeConfig encode_cfg = config.encode;
  encode_cfg.seed = seed;
  art.encoded = encode_dataset(working, dataset_id, encode_cfg);

  TreeFitConfig tree_cfg = config.tree;
  tree_cfg.seed = seed;
  tree_cfg.class_weights = {1.0, 1.0};
  {
    const std::vector<Index> rows = art.encoded.rows_with(kTrain);
    Index pos = 0;
    for (Index r : rows) pos += art.encoded.target[r];
    const Index neg = static_cast<Index>(rows.size()) - pos;
    if (pos > 0 && neg > 0) {
      tree_cfg.class_weights = {
          static_cast<double>(rows.size()) / (2.0 * static_cast<double>(neg)),
          static_cast<double>(rows.size()) / (2.0 * static_cast<double>(pos))};
    }
    art.tree = fit_symbolic_tree(art.encoded, rows, tree_cfg);
  }

  std::vector<DecisionRule> rules = extract_rules(art.tree);
  int max_len = 1;
  std::vector<DecisionRule> deduped;
  for (const DecisionRule& r : rules) {
    DecisionRule d = dedupe_rule(r);
    max_len = std::max(max_len, static_cast<int>(d.conditions.size()));
    deduped.push_back(std::move(d));
  }
  art.rules = pad_rules(deduped, max_len);
  return art;
}

RunResult run_single_training(const DataTable& cleaned, const std::string& dataset_id,
                              const std::string& model_kind, const ResolvedConfig& config,
                              Index subsample, std::uint64_t seed, FuzzyModel* trained_out) {
  RunResult result;
  result.seed = seed;
  PipelineArtifacts art = run_pipeline_to_rules(cleaned, dataset_id, config, subsample, seed);

  std::vector<int> tree_pred;
  const std::vector<Index> test_rows = art.encoded.rows_with(kTest);
  for (Index r : test_rows) tree_pred.push_back(art.tree.predict(art.encoded.codes, r));
  result.tree_test = metrics_from_predictions(tree_pred, art.encoded.target, test_rows);

  ModelConfig model_cfg = config.model;
  model_cfg.seed = seed;
  FuzzyModel model =
      model_kind == "nsdt"
          ? build_nsdt(art.rules, art.encoded.features, art.encoded.bins, model_cfg)
          : build_gnsdt(art.rules, art.encoded.features, art.encoded.bins, model_cfg);

  TrainConfig train_cfg = config.train;
  train_cfg.seed = seed;
  result.history = train(model, art.encoded, train_cfg);
  result.test = evaluate_split(model, art.encoded, kTest);
  result.valid_bacc = result.history.best_valid_bacc;
  if (trained_out) *trained_out = std::move(model);
  return result;
}

// ---------------------------------------------------------------------------
// command drivers
// ---------------------------------------------------------------------------

namespace {

void persist_manifest(const ExperimentManifest& manifest, const ResolvedConfig& config) {
  write_json_file((fs::path(manifest.out_dir) / "manifest.json").string(), manifest.to_json());
  write_json_file((fs::path(manifest.out_dir) / "resolved_config.json").string(),
                  config.to_json());
}

std::map<std::string, double> baseline_run(const DataTable& cleaned,
                                           const ExperimentManifest& manifest,
                                           const ResolvedConfig& config, std::uint64_t seed) {
  const DataTable working = manifest.subsample > 0
                                ? subsample_stratified(cleaned, manifest.subsample,
                                                       seed ^ 0x9e3779b9ull)
                                : cleaned;
  EncodeConfig encode_cfg = config.encode;
  encode_cfg.seed = seed;
  const EncodedDataset enc = encode_dataset(working, manifest.dataset, encode_cfg);
  BaselineConfig bl;
  bl.kind = manifest.model == "knn" ? BaselineKind::knn
            : manifest.model == "dtree" ? BaselineKind::dtree
                                        : BaselineKind::rforest;
  bl.max_depth = config.tree.max_depth;
  bl.min_leaf = config.tree.min_leaf;
  bl.seed = seed;
  const BaselineResult res = fit_predict_baseline(bl, working, enc);
  return {{"test_balanced_accuracy", res.metrics.balanced_accuracy},
          {"test_accuracy", res.metrics.accuracy}};
}

}  // namespace

json cmd_prepare(const ExperimentManifest& manifest) {
  const ResolvedConfig config = ResolvedConfig::load(manifest.config_path);
  persist_manifest(manifest, config);
  CleanReport clean;
  DataTable table = load_cleaned(manifest, &clean);
  const std::uint64_t seed = manifest.seeds.empty() ? 1 : manifest.seeds.front();
  if (manifest.subsample > 0)
    table = subsample_stratified(table, manifest.subsample, seed ^ 0x9e3779b9ull);
  EncodeConfig encode_cfg = config.encode;
  encode_cfg.seed = seed;
  const EncodedDataset enc = encode_dataset(table, manifest.dataset, encode_cfg);
  const std::string container = (fs::path(manifest.out_dir) / "encoded.nsdtds").string();
  save_encoded(enc, container);

  Index pos = 0;
  for (Index i = 0; i < enc.target.size(); ++i) pos += enc.target[i];
  const Index n = enc.rows();
  std::array<Index, 3> split_counts{};
  for (std::uint8_t tag : enc.split) ++split_counts[tag];

  json report;
  report["dataset"] = manifest.dataset;
  report["container"] = container;
  report["rows_before_cleaning"] = clean.rows_before;
  report["rows_after_cleaning"] = clean.rows_after;
  report["dropped_missing"] = clean.dropped_missing;
  report["dropped_duplicates"] = clean.dropped_duplicates;
  report["dropped_conflicts"] = clean.dropped_conflicts;
  report["rows_encoded"] = n;
  report["positives"] = pos;
  report["positive_fraction"] = static_cast<double>(pos) / static_cast<double>(n);
  report["split_counts"] = {{"train", split_counts[0]},
                            {"valid", split_counts[1]},
                            {"test", split_counts[2]}};
  const PaperReference& ref = reference_for(manifest);
  if (manifest.subsample == 0) {
    std::vector<ComparisonRow> rows;
    rows.push_back(compare_to_reference(
        "cleaned sample count", static_cast<double>(clean.rows_after),
        ref.sample_count(manifest.dataset), 0.02 * ref.sample_count(manifest.dataset)));
    report["comparisons"] = comparison_to_json(rows);
  }
  write_json_file((fs::path(manifest.out_dir) / "prepare_report.json").string(), report);
  return report;
}

json cmd_train(const ExperimentManifest& manifest) {
  const ResolvedConfig config = ResolvedConfig::load(manifest.config_path);
  persist_manifest(manifest, config);
  const DataTable cleaned = load_cleaned(manifest);
  const PaperReference& ref = reference_for(manifest);
  const bool neural = manifest.model == "nsdt" || manifest.model == "gnsdt";

  std::vector<json> run_records;
  int run_index = 0;
  auto fn = [&](std::uint64_t run_seed) -> std::map<std::string, double> {
    std::map<std::string, double> metrics;
    if (neural) {
      FuzzyModel trained;
      const RunResult run = run_single_training(cleaned, manifest.dataset, manifest.model,
                                                config, manifest.subsample, run_seed, &trained);
      metrics["test_balanced_accuracy"] = run.test.balanced_accuracy;
      metrics["test_accuracy"] = run.test.accuracy;
      metrics["tree_test_balanced_accuracy"] = run.tree_test.balanced_accuracy;
      metrics["valid_balanced_accuracy"] = run.valid_bacc;
      const std::string ck =
          (fs::path(manifest.out_dir) / ("checkpoint_run" + std::to_string(run_index) + ".nsdt"))
              .string();
      save_checkpoint(trained, ck);
      json rec;
      rec["seed"] = run_seed;
      rec["checkpoint"] = ck;
      rec["epochs"] = run.history.epochs.size();
      rec["best_epoch"] = run.history.best_epoch;
      rec["diverged"] = run.history.diverged;
      run_records.push_back(std::move(rec));
    } else {
      metrics = baseline_run(cleaned, manifest, config, run_seed);
      json rec;
      rec["seed"] = run_seed;
      run_records.push_back(std::move(rec));
    }
    ++run_index;
    return metrics;
  };

  const SeededRuns runs = run_seeded(fn, manifest.seeds, manifest.repeats);

  std::vector<ComparisonRow> rows;
  const std::string ref_model = manifest.model == "ft_trans" ? "ft_trans" : manifest.model;
  std::optional<double> paper;
  if (ref.has_performance(ref_model, manifest.dataset))
    paper = ref.performance(ref_model, manifest.dataset);
  rows.push_back(compare_to_reference(
      manifest.model + "/" + manifest.dataset + " balanced accuracy",
      runs.mean.at("test_balanced_accuracy"), paper, 0.015));

  json report;
  report["dataset"] = manifest.dataset;
  report["model"] = manifest.model;
  report["mean"] = runs.mean;
  report["stddev"] = runs.stddev;
  report["run_seeds"] = runs.run_seeds;
  report["runs"] = json::array();
  for (std::size_t i = 0; i < runs.runs.size(); ++i) {
    json r = run_records[i];
    for (const auto& [k, v] : runs.runs[i]) r[k] = v;
    report["runs"].push_back(std::move(r));
  }
  report["reduced_replication"] = runs.reduced_replication;
  report["comparisons"] = comparison_to_json(rows);
  write_json_file((fs::path(manifest.out_dir) / "train_report.json").string(), report);
  write_text_file((fs::path(manifest.out_dir) / "train_table.txt").string(),
                  render_comparison_table(rows));
  return report;
}

json cmd_eval(const ExperimentManifest& manifest) {
  const ResolvedConfig config = ResolvedConfig::load(manifest.config_path);
  persist_manifest(manifest, config);
  const FuzzyModel model = load_checkpoint(manifest.checkpoint);
  const EncodedDataset enc = load_encoded(manifest.dataset);  // container path
  const Metrics test = evaluate_split(model, enc, kTest);
  const Metrics valid = evaluate_split(model, enc, kValid);
  json report;
  report["checkpoint"] = manifest.checkpoint;
  report["container"] = manifest.dataset;
  report["test_balanced_accuracy"] = test.balanced_accuracy;
  report["test_accuracy"] = test.accuracy;
  report["valid_balanced_accuracy"] = valid.balanced_accuracy;
  write_json_file((fs::path(manifest.out_dir) / "eval_report.json").string(), report);
  return report;
}

json cmd_ablate(const ExperimentManifest& manifest) {
  ResolvedConfig config = ResolvedConfig::load(manifest.config_path);
  persist_manifest(manifest, config);
  const DataTable cleaned = load_cleaned(manifest);
  const PaperReference& ref = reference_for(manifest);

  auto arm = [&](bool with_regs) {
    ResolvedConfig arm_cfg = config;
    if (!with_regs) {
      arm_cfg.train.reg.alpha = 0.0;
      arm_cfg.train.reg.disable_all();
    }
    std::vector<std::uint64_t> hashes;
    auto fn = [&](std::uint64_t run_seed) -> std::map<std::string, double> {
      const RunResult run = run_single_training(cleaned, manifest.dataset, manifest.model,
                                                arm_cfg, manifest.subsample, run_seed);
      hashes.push_back(run.history.batch_order_hash);
      return {{"test_balanced_accuracy", run.test.balanced_accuracy}};
    };
    const SeededRuns runs = run_seeded(fn, manifest.seeds, manifest.repeats);
    return std::make_pair(runs, hashes);
  };

  const auto [all_regs, hashes_on] = arm(true);
  const auto [no_reg, hashes_off] = arm(false);
  const bool batches_identical = hashes_on == hashes_off;

  const auto [paper_all, paper_none] = ref.ablation(manifest.dataset);
  std::vector<ComparisonRow> rows;
  rows.push_back(compare_to_reference("all-regularizers arm",
                                      all_regs.mean.at("test_balanced_accuracy"), paper_all,
                                      0.02));
  rows.push_back(compare_to_reference("no-regularizer arm",
                                      no_reg.mean.at("test_balanced_accuracy"), paper_none,
                                      0.02));
  rows.push_back(compare_to_reference(
      "paired delta (all - none)",
      all_regs.mean.at("test_balanced_accuracy") - no_reg.mean.at("test_balanced_accuracy"),
      paper_all - paper_none, 0.02));

  json report;
  report["dataset"] = manifest.dataset;
  report["model"] = manifest.model;
  report["all_regs"] = {{"mean", all_regs.mean}, {"stddev", all_regs.stddev}};
  report["no_reg"] = {{"mean", no_reg.mean}, {"stddev", no_reg.stddev}};
  report["paired_delta"] =
      all_regs.mean.at("test_balanced_accuracy") - no_reg.mean.at("test_balanced_accuracy");
  report["batches_identical_across_arms"] = batches_identical;
  report["comparisons"] = comparison_to_json(rows);
  write_json_file((fs::path(manifest.out_dir) / "ablation_report.json").string(), report);
  write_text_file((fs::path(manifest.out_dir) / "ablation_table.txt").string(),
                  render_comparison_table(rows));
  return report;
}

json cmd_robustness(const ExperimentManifest& manifest) {
  const ResolvedConfig config = ResolvedConfig::load(manifest.config_path);
  persist_manifest(manifest, config);
  const DataTable cleaned = load_cleaned(manifest);
  const PaperReference& ref = reference_for(manifest);
  const std::uint64_t seed = manifest.seeds.empty() ? 1 : manifest.seeds.front();

  // corruption of the raw cleaned table, fixed per experiment seed
  NoiseConfig noise;
  noise.seed = seed ^ 0x517cc1b727220a95ull;
  noise.feature_fraction = manifest.noise_feature_fraction;
  DataTable corrupted = cleaned;
  NoiseReport noise_report;
  if (manifest.noise_feature_fraction > 0.0)
    corrupted = inject_noise(cleaned, noise, &noise_report);

  std::vector<std::string> corrupted_names;
  for (const NoisedFeature& f : noise_report.features) corrupted_names.push_back(f.name);
  IntVector target(cleaned.target.size());
  for (Index i = 0; i < cleaned.target.size(); ++i)
    target[i] = cleaned.target[i] >= 0.5 ? 1 : 0;
  const std::vector<AssociationRecord> assoc =
      corrupted_names.empty()
          ? std::vector<AssociationRecord>{}
          : correlation_drop_check(cleaned, corrupted, target, corrupted_names);

  const std::vector<std::string> models = {"gnsdt", "knn", "dtree", "rforest"};
  json table = json::array();
  std::map<std::string, double> drops;
  for (const std::string& model_kind : models) {
    auto run_arm = [&](const DataTable& table_in) -> double {
      if (model_kind == "gnsdt" || model_kind == "nsdt") {
        double acc = 0;
        for (std::uint64_t s : manifest.seeds) {
          const RunResult run = run_single_training(table_in, manifest.dataset, model_kind,
                                                    config, manifest.subsample, s);
          acc += run.test.balanced_accuracy;
        }
        return acc / static_cast<double>(manifest.seeds.size());
      }
      ExperimentManifest m = manifest;
      m.model = model_kind;
      double acc = 0;
      for (std::uint64_t s : manifest.seeds)
        acc += baseline_run(table_in, m, config, s).at("test_balanced_accuracy");
      return acc / static_cast<double>(manifest.seeds.size());
    };
    const double before = run_arm(cleaned);
    const double after = manifest.noise_feature_fraction > 0.0 ? run_arm(corrupted) : before;
    const double drop = robustness_drop(before, after);
    drops[model_kind] = drop;
    json row;
    row["model"] = model_kind;
    row["before"] = before;
    row["after"] = after;
    row["drop_percent"] = drop;
    if (ref.has_robustness(manifest.dataset)) {
      const std::string ref_model = model_kind == "nsdt" ? "gnsdt" : model_kind;
      const auto paper = ref.robustness(manifest.dataset, ref_model);
      row["paper_before"] = paper[0];
      row["paper_after"] = paper[1];
      row["paper_drop_percent"] = paper[2];
    }
    table.push_back(std::move(row));
  }

  json report;
  report["dataset"] = manifest.dataset;
  report["noise"] = {{"feature_fraction", noise.feature_fraction},
                     {"input_fraction", noise.input_fraction},
                     {"std_fraction", noise.std_fraction},
                     {"seed", noise.seed}};
  report["corrupted_features"] = json::array();
  for (const NoisedFeature& f : noise_report.features) {
    json jf;
    jf["name"] = f.name;
    jf["kind"] = f.kind == FeatureKind::numerical ? "num" : "cat";
    jf["noise_mean"] = f.noise_mean;
    jf["noise_std"] = f.noise_std;
    jf["corrupted_entries"] = f.corrupted_entries;
    report["corrupted_features"].push_back(std::move(jf));
  }
  report["association"] = json::array();
  bool all_dropped = !assoc.empty();
  for (const AssociationRecord& a : assoc) {
    json ja;
    ja["name"] = a.name;
    ja["before"] = a.before;
    ja["after"] = a.after;
    ja["relative_drop"] = a.relative_drop;
    ja["excluded"] = a.excluded;
    report["association"].push_back(std::move(ja));
    if (!a.excluded && std::abs(a.after) >= std::abs(a.before)) all_dropped = false;
  }
  report["all_associations_dropped"] = all_dropped;
  report["table"] = table;
  report["gnsdt_drop_below_dtree"] = drops["gnsdt"] < drops["dtree"];
  write_json_file((fs::path(manifest.out_dir) / "robustness_report.json").string(), report);

  std::ostringstream txt;
  txt << std::left << std::setw(10) << "model" << std::right << std::setw(10) << "before"
      << std::setw(10) << "after" << std::setw(10) << "drop%" << "\n";
  for (const auto& row : table)
    txt << std::left << std::setw(10) << row["model"].get<std::string>() << std::right
        << std::fixed << std::setprecision(4) << std::setw(10) << row["before"].get<double>()
        << std::setw(10) << row["after"].get<double>() << std::setprecision(2) << std::setw(10)
        << row["drop_percent"].get<double>() << "\n";
  write_text_file((fs::path(manifest.out_dir) / "robustness_table.txt").string(), txt.str());
  return report;
}

json cmd_explain(const ExperimentManifest& manifest) {
  const ResolvedConfig config = ResolvedConfig::load(manifest.config_path);
  persist_manifest(manifest, config);
  const FuzzyModel model = load_checkpoint(manifest.checkpoint);
  const PaperReference& ref = reference_for(manifest);

  const ValidityReport validity = validity_report(model, config.decode_cut);
  const std::vector<DecodedRule> rules =
      extract_rules_report(model, config.decode_cut, manifest.redact);

  // response tables: first le and (if present) ge node, probed like the paper
  json response_json = json::array();
  std::string response_txt;
  auto probe = [&](ModuleKind kind) {
    for (Index n = 0; n < model.node_count(); ++n) {
      if (model.nodes[static_cast<std::size_t>(n)].module != kind) continue;
      const FeatureSpec& spec =
          model.features[static_cast<std::size_t>(model.nodes[static_cast<std::size_t>(n)].feature)];
      const int h = spec.cardinality();
      if (h < 5) continue;
      std::vector<int> bins = {0, static_cast<int>(std::lround(0.4 * (h - 1))),
                               static_cast<int>(std::lround(0.7 * (h - 1))),
                               static_cast<int>(std::lround(0.85 * (h - 1))), h - 1};
      bins.erase(std::unique(bins.begin(), bins.end()), bins.end());
      const ResponseTable table = operator_response_table(model, n, bins);
      json jt;
      jt["node"] = table.node;
      jt["feature"] = table.feature;
      jt["module"] = table.module;
      jt["probe_bins"] = table.probe_bins;
      jt["outputs"] = table.outputs;
      response_json.push_back(std::move(jt));
      response_txt += render_response_table(table) + "\n";
      break;
    }
  };
  probe(ModuleKind::le);
  probe(ModuleKind::ge);

  json report;
  report["checkpoint"] = manifest.checkpoint;
  report["numerical_validity_percent"] = validity.numerical_validity;
  report["numerical_monotone_percent"] = validity.numerical_monotone_pct;
  report["categorical_validity_percent"] = validity.categorical_validity;
  report["numerical_nodes"] = validity.numerical_nodes;
  report["categorical_nodes"] = validity.categorical_nodes;
  std::vector<ComparisonRow> rows;
  rows.push_back(compare_to_reference("numerical threshold validity %",
                                      validity.numerical_validity,
                                      ref.numerical_validity(manifest.dataset), 10.0));
  if (ref.has_categorical_validity(manifest.dataset) && validity.categorical_nodes > 0)
    rows.push_back(compare_to_reference("categorical threshold validity %",
                                        validity.categorical_validity,
                                        ref.categorical_validity(manifest.dataset), 10.0));
  report["comparisons"] = comparison_to_json(rows);
  report["rules"] = json::array();
  for (const DecodedRule& r : rules) {
    json jr;
    jr["rule_index"] = r.rule_index;
    jr["weight"] = r.weight;
    jr["weight_negative"] = r.weight_negative;
    jr["weight_positive"] = r.weight_positive;
    jr["conditions"] = json::array();
    for (const DecodedCondition& c : r.conditions) {
      json jc;
      jc["feature"] = c.feature;
      jc["redacted"] = c.redacted;
      if (!c.redacted) {
        jc["glyph"] = c.glyph;
        if (c.glyph == "in" || c.glyph == "not in") {
          jc["levels"] = c.levels;
        } else {
          jc["threshold_bin"] = c.threshold_bin;
          if (c.unbounded_low)
            jc["threshold_value"] = nullptr;
          else
            jc["threshold_value"] = c.threshold_value;
        }
      }
      jr["conditions"].push_back(std::move(jc));
    }
    report["rules"].push_back(std::move(jr));
  }
  report["response_tables"] = response_json;

  write_json_file((fs::path(manifest.out_dir) / "explain_report.json").string(), report);
  write_text_file((fs::path(manifest.out_dir) / "validity.txt").string(),
                  render_validity_report(validity) + "\n" + render_comparison_table(rows));
  write_text_file((fs::path(manifest.out_dir) / "rules.txt").string(),
                  render_decoded_rules(rules));
  write_text_file((fs::path(manifest.out_dir) / "response_tables.txt").string(), response_txt);
  return report;
}

}  // namespace nsdt
