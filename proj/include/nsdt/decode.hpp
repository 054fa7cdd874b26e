#pragma once

#include "nsdt/common.hpp"
#include "nsdt/model.hpp"

#include <optional>
#include <string>
#include <vector>

namespace nsdt {

// Module outputs of one fuzzy node over every code of its feature.
Vector node_response_curve(const FuzzyModel& model, Index node);

// argmin_j |module(S_ij, t) - 0.5|, ties broken toward the lowest index.
int decode_numerical_threshold(const FuzzyModel& model, Index node);

// { levels with be output > cut }; empty and all-inclusive sets permitted.
std::vector<int> decode_categorical_threshold(const FuzzyModel& model, Index node,
                                              double cut = 0.9);

struct NodeDiagnostic {
  int node = -1;
  int feature = -1;
  ModuleKind module = ModuleKind::le;
  int decoded_bin = -1;            // numerical
  std::vector<int> decoded_levels;  // categorical
  bool valid = false;
  bool strictly_monotone = false;  // over the full bin range (numerical)
};

struct ValidityReport {
  double numerical_validity = 0;    // percent over numerical fuzzy nodes
  double categorical_validity = 0;  // percent over categorical fuzzy nodes
  Index numerical_nodes = 0;
  Index categorical_nodes = 0;
  double numerical_monotone_pct = 0;  // strictly monotone response curves
  std::vector<NodeDiagnostic> diagnostics;
};

// le node with decoded bin d is valid iff its output at d lies strictly below
// every output before d and strictly above every output after d; ge nodes use
// the reversed inequalities; ties count as invalid.
ValidityReport numerical_validity(const FuzzyModel& model);
// categorical node valid iff every level output is outside [1-cut, cut]
ValidityReport categorical_validity(const FuzzyModel& model, double cut = 0.9);
ValidityReport validity_report(const FuzzyModel& model, double cut = 0.9);

struct DecodedCondition {
  std::string feature;
  std::string glyph;               // <=, >, in, not in
  double threshold_value = 0;      // numerical: left edge of the decoded bin
  int threshold_bin = -1;
  bool unbounded_low = false;      // decoded bin 0: no finite left edge
  std::vector<std::string> levels; // categorical threshold set
  bool redacted = false;
};

struct DecodedRule {
  int rule_index = -1;
  double weight_negative = 0;  // head weight toward class 0
  double weight_positive = 0;  // head weight toward class 1
  double weight = 0;           // positive minus negative log-odds contribution
  std::vector<DecodedCondition> conditions;  // padding dropped
};

std::vector<DecodedRule> extract_rules_report(const FuzzyModel& model, double cut = 0.9,
                                              const std::vector<std::string>& redact = {});

struct ResponseTable {
  int node = -1;
  std::string feature;
  std::string module;
  std::vector<int> probe_bins;
  std::vector<double> outputs;
};

ResponseTable operator_response_table(const FuzzyModel& model, Index node,
                                      const std::vector<int>& probe_bins);

std::string render_response_table(const ResponseTable& table);
std::string render_decoded_rules(const std::vector<DecodedRule>& rules);
std::string render_validity_report(const ValidityReport& report);

}  // namespace nsdt
