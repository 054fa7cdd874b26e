#include "nsdt/experiments.hpp"
#include "nsdt/fetch.hpp"
#include "nsdt/synthetic.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <cstdlib>
#include <filesystem>
#include <iostream>

namespace fs = std::filesystem;
using nlohmann::json;
using namespace nsdt;

namespace {

std::string default_data_dir() {
  if (const char* env = std::getenv("NSDT_DATA_DIR")) return env;
  return "data/cache";
}

void add_common(CLI::App* cmd, ExperimentManifest& m) {
  cmd->add_option("--dataset", m.dataset, "dataset id (higgs, census, credit, insurance)");
  cmd->add_option("--model", m.model, "nsdt, gnsdt, knn, dtree, rforest")
      ->check(CLI::IsMember({"nsdt", "gnsdt", "knn", "dtree", "rforest"}));
  cmd->add_option("--config", m.config_path, "JSON hyperparameter overrides");
  cmd->add_option("--seeds", m.seeds, "experiment seeds");
  cmd->add_option("--repeats", m.repeats, "repeats per seed");
  cmd->add_option("--subsample", m.subsample, "stratified row cap (0 = full scale)");
  cmd->add_option("--data-dir", m.data_dir, "dataset cache directory");
  cmd->add_option("--out-dir", m.out_dir, "output directory")->required();
  cmd->add_option("--refs", m.reference_path, "reference-values JSON override");
}

// on failure: quarantine partial outputs, leave a machine-readable record
int guarded(const ExperimentManifest& manifest, const std::function<json()>& body) {
  try {
    const json report = body();
    std::cout << report.dump(2) << "\n";
    return 0;
  } catch (const std::exception& e) {
    const fs::path out(manifest.out_dir);
    std::error_code ec;
    fs::create_directories(out, ec);
    const fs::path quarantine = out / "quarantine";
    fs::create_directories(quarantine, ec);
    for (const auto& entry : fs::directory_iterator(out, ec)) {
      if (entry.path().filename() == "quarantine" || entry.path().filename() == "failure.json")
        continue;
      fs::rename(entry.path(), quarantine / entry.path().filename(), ec);
    }
    json failure;
    failure["command"] = manifest.command;
    failure["error"] = e.what();
    failure["manifest"] = manifest.to_json();
    write_json_file((out / "failure.json").string(), failure);
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"neural symbolic decision trees: data preparation, training, and reports"};
  app.require_subcommand(1);

  ExperimentManifest manifest;
  manifest.data_dir = default_data_dir();

  auto* prepare = app.add_subcommand("prepare", "clean, binarize, discretize, split, encode");
  add_common(prepare, manifest);

  auto* train_cmd = app.add_subcommand("train", "train a model over seeds x repeats");
  add_common(train_cmd, manifest);

  auto* eval_cmd = app.add_subcommand("eval", "evaluate a checkpoint on an encoded container");
  add_common(eval_cmd, manifest);
  eval_cmd->add_option("--checkpoint", manifest.checkpoint, "trained checkpoint")->required();
  eval_cmd->add_option("--container", manifest.dataset, "encoded dataset container")
      ->required();

  auto* ablate = app.add_subcommand("ablate", "all-regularizers vs no-regularizer arms");
  add_common(ablate, manifest);

  auto* robustness = app.add_subcommand("robustness", "noise-injection protocol end to end");
  add_common(robustness, manifest);
  robustness->add_option("--feature-fraction", manifest.noise_feature_fraction,
                         "corrupted feature fraction (0 = noiseless control)");

  auto* explain = app.add_subcommand("explain", "validity report, decoded rules, responses");
  add_common(explain, manifest);
  explain->add_option("--checkpoint", manifest.checkpoint, "trained checkpoint")->required();
  explain->add_option("--redact", manifest.redact, "feature names to redact from rules");

  auto* report_cmd = app.add_subcommand("report", "re-render reports from a results directory");
  report_cmd->add_option("--out-dir", manifest.out_dir, "results directory")->required();

  std::string synth_dataset;
  Index synth_rows = 20000;
  std::uint64_t synth_seed = 7;
  std::string synth_dir = manifest.data_dir;
  auto* synth = app.add_subcommand(
      "synth", "write deterministic schema-matched stand-in files (offline use)");
  synth->add_option("--dataset", synth_dataset, "dataset id")->required();
  synth->add_option("--rows", synth_rows, "row count");
  synth->add_option("--seed", synth_seed, "generator seed");
  synth->add_option("--data-dir", synth_dir, "dataset cache directory");

  std::string fetch_dataset_id;
  std::string fetch_dir = manifest.data_dir;
  auto* fetch = app.add_subcommand("fetch", "download published dataset files");
  fetch->add_option("--dataset", fetch_dataset_id, "dataset id")->required();
  fetch->add_option("--data-dir", fetch_dir, "dataset cache directory");

  CLI11_PARSE(app, argc, argv);

  if (synth->parsed()) {
    SynthConfig cfg;
    cfg.rows = synth_rows;
    cfg.seed = synth_seed;
    write_synthetic_dataset(synth_dataset, synth_dir, cfg);
    std::cout << "wrote synthetic " << synth_dataset << " under " << synth_dir << "\n";
    return 0;
  }
  if (fetch->parsed()) {
    const FetchResult result = nsdt::fetch_dataset(fetch_dataset_id, fetch_dir);
    std::cout << result.message << "\n";
    return result.ok ? 0 : 1;
  }
  if (report_cmd->parsed()) {
    manifest.command = "report";
    return guarded(manifest, [&] {
      json combined = json::object();
      for (const auto& entry : fs::directory_iterator(manifest.out_dir)) {
        const std::string name = entry.path().filename().string();
        if (entry.path().extension() == ".json")
          combined[name] = json::parse(read_text_file(entry.path().string()));
      }
      return combined;
    });
  }

  if (prepare->parsed()) {
    manifest.command = "prepare";
    return guarded(manifest, [&] { return cmd_prepare(manifest); });
  }
  if (train_cmd->parsed()) {
    manifest.command = "train";
    return guarded(manifest, [&] { return cmd_train(manifest); });
  }
  if (eval_cmd->parsed()) {
    manifest.command = "eval";
    return guarded(manifest, [&] { return cmd_eval(manifest); });
  }
  if (ablate->parsed()) {
    manifest.command = "ablate";
    return guarded(manifest, [&] { return cmd_ablate(manifest); });
  }
  if (robustness->parsed()) {
    manifest.command = "robustness";
    return guarded(manifest, [&] { return cmd_robustness(manifest); });
  }
  if (explain->parsed()) {
    manifest.command = "explain";
    return guarded(manifest, [&] { return cmd_explain(manifest); });
  }
  return 0;
}
