#include "nsdt/reference.hpp"

#include "nsdt/common.hpp"

namespace nsdt {

using nlohmann::json;

namespace {

const char* kBuiltinReference = R"JSON({
  "version": "1",
  "performance": {
    "knn":      {"higgs": 0.582, "census": 0.781, "credit": 0.630, "insurance": 0.778},
    "dtree":    {"higgs": 0.684, "census": 0.832, "credit": 0.755, "insurance": 0.823},
    "rforest":  {"higgs": 0.705, "census": 0.848, "credit": 0.773, "insurance": 0.841},
    "snn":      {"higgs": 0.722, "census": 0.851, "credit": 0.776, "insurance": 0.848},
    "autoint":  {"higgs": 0.725, "census": 0.856, "credit": 0.778, "insurance": 0.852},
    "ft_trans": {"higgs": 0.728, "census": 0.858, "credit": 0.781, "insurance": 0.854},
    "nsdt":     {"higgs": 0.718, "census": 0.856, "credit": 0.777, "insurance": 0.851},
    "gnsdt":    {"higgs": 0.725, "census": 0.861, "credit": 0.781, "insurance": 0.855}
  },
  "paper_reported_only": ["snn", "autoint", "ft_trans"],
  "ablation": {
    "higgs":     {"all_regs": 0.725, "no_reg": 0.711},
    "census":    {"all_regs": 0.861, "no_reg": 0.863},
    "credit":    {"all_regs": 0.781, "no_reg": 0.774},
    "insurance": {"all_regs": 0.855, "no_reg": 0.853}
  },
  "robustness": {
    "higgs": {
      "knn":     {"before": 0.582, "after": 0.536, "drop_percent": 7.90},
      "dtree":   {"before": 0.684, "after": 0.650, "drop_percent": 4.97},
      "rforest": {"before": 0.705, "after": 0.661, "drop_percent": 6.24},
      "gnsdt":   {"before": 0.725, "after": 0.694, "drop_percent": 4.28}
    },
    "insurance": {
      "knn":     {"before": 0.778, "after": 0.750, "drop_percent": 3.60},
      "dtree":   {"before": 0.823, "after": 0.813, "drop_percent": 1.22},
      "rforest": {"before": 0.841, "after": 0.826, "drop_percent": 1.78},
      "gnsdt":   {"before": 0.855, "after": 0.851, "drop_percent": 0.47}
    }
  },
  "validity": {
    "numerical":   {"higgs": 91.9, "census": 90.3, "credit": 92.5, "insurance": 91.2},
    "categorical": {"census": 99.5, "insurance": 99.7}
  },
  "dataset_stats": {
    "samples": {"higgs": 98050, "census": 231633, "credit": 150000, "insurance": 188318},
    "sample_tolerance": 0.02
  }
})JSON";

}  // namespace

const PaperReference& PaperReference::builtin() {
  static const PaperReference ref(json::parse(kBuiltinReference));
  return ref;
}

PaperReference PaperReference::from_file(const std::string& path) {
  return PaperReference(json::parse(read_text_file(path)));
}

double PaperReference::performance(const std::string& model, const std::string& dataset) const {
  return values_.at("performance").at(model).at(dataset).get<double>();
}

bool PaperReference::has_performance(const std::string& model,
                                     const std::string& dataset) const {
  const auto& perf = values_.at("performance");
  return perf.contains(model) && perf.at(model).contains(dataset);
}

std::pair<double, double> PaperReference::ablation(const std::string& dataset) const {
  const auto& row = values_.at("ablation").at(dataset);
  return {row.at("all_regs").get<double>(), row.at("no_reg").get<double>()};
}

bool PaperReference::has_robustness(const std::string& dataset) const {
  return values_.at("robustness").contains(dataset);
}

std::array<double, 3> PaperReference::robustness(const std::string& dataset,
                                                 const std::string& model) const {
  const auto& row = values_.at("robustness").at(dataset).at(model);
  return {row.at("before").get<double>(), row.at("after").get<double>(),
          row.at("drop_percent").get<double>()};
}

double PaperReference::numerical_validity(const std::string& dataset) const {
  return values_.at("validity").at("numerical").at(dataset).get<double>();
}

bool PaperReference::has_categorical_validity(const std::string& dataset) const {
  return values_.at("validity").at("categorical").contains(dataset);
}

double PaperReference::categorical_validity(const std::string& dataset) const {
  return values_.at("validity").at("categorical").at(dataset).get<double>();
}

double PaperReference::sample_count(const std::string& dataset) const {
  return values_.at("dataset_stats").at("samples").at(dataset).get<double>();
}

std::string PaperReference::version() const { return values_.at("version").get<std::string>(); }

}  // namespace nsdt
