#pragma once

#include <nlohmann/json.hpp>

#include <string>

namespace nsdt {

// Published reference values the experiment reports compare against
// (balanced accuracies, ablation arms, robustness drops, validity percents).
// Shipped as configs/reference_values.json; the builtin copy is identical so
// reports never hard-code numbers in logic.
class PaperReference {
 public:
  static const PaperReference& builtin();
  static PaperReference from_file(const std::string& path);

  // balanced accuracy by model {knn,dtree,rforest,snn,autoint,ft_trans,nsdt,gnsdt}
  double performance(const std::string& model, const std::string& dataset) const;
  bool has_performance(const std::string& model, const std::string& dataset) const;
  // ablation arms: {all_regs, no_reg}
  std::pair<double, double> ablation(const std::string& dataset) const;
  // robustness: model -> {before, after, drop_percent}; higgs and insurance only
  bool has_robustness(const std::string& dataset) const;
  std::array<double, 3> robustness(const std::string& dataset, const std::string& model) const;
  // threshold validity percents; categorical reported for census/insurance only
  double numerical_validity(const std::string& dataset) const;
  bool has_categorical_validity(const std::string& dataset) const;
  double categorical_validity(const std::string& dataset) const;
  // dataset statistics: cleaned sample counts
  double sample_count(const std::string& dataset) const;

  const nlohmann::json& raw() const { return values_; }
  std::string version() const;

 private:
  explicit PaperReference(nlohmann::json values) : values_(std::move(values)) {}
  nlohmann::json values_;
};

}  // namespace nsdt
