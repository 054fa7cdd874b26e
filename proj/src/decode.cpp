#include "nsdt/decode.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <sstream>

namespace nsdt {

Vector node_response_curve(const FuzzyModel& model, Index node) {
  const FuzzyNode& fn = model.nodes[static_cast<std::size_t>(node)];
  const Tensor& emb = model.embeddings[static_cast<std::size_t>(fn.feature)];
  const Index card = emb.value.rows();
  const int dim = model.config.dim;
  Matrix x(card, 2 * dim);
  x.leftCols(dim) = emb.value;
  x.rightCols(dim) = model.thresholds.value.row(node).replicate(card, 1);
  return model.module_of(fn.module).forward(x);
}

int decode_numerical_threshold(const FuzzyModel& model, Index node) {
  const Vector curve = node_response_curve(model, node);
  int best = 0;
  for (Index j = 1; j < curve.size(); ++j)
    if (std::abs(curve[j] - 0.5) < std::abs(curve[best] - 0.5)) best = static_cast<int>(j);
  return best;
}

std::vector<int> decode_categorical_threshold(const FuzzyModel& model, Index node, double cut) {
  const Vector curve = node_response_curve(model, node);
  std::vector<int> levels;
  for (Index j = 0; j < curve.size(); ++j)
    if (curve[j] > cut) levels.push_back(static_cast<int>(j));
  return levels;
}

namespace {

bool is_strictly_monotone(const Vector& curve, bool increasing) {
  for (Index j = 1; j < curve.size(); ++j) {
    if (increasing && !(curve[j] > curve[j - 1])) return false;
    if (!increasing && !(curve[j] < curve[j - 1])) return false;
  }
  return true;
}

NodeDiagnostic diagnose_numerical(const FuzzyModel& model, Index node) {
  const FuzzyNode& fn = model.nodes[static_cast<std::size_t>(node)];
  const Vector curve = node_response_curve(model, node);
  NodeDiagnostic diag;
  diag.node = static_cast<int>(node);
  diag.feature = fn.feature;
  diag.module = fn.module;
  const int d = decode_numerical_threshold(model, node);
  diag.decoded_bin = d;
  const bool increasing = fn.module == ModuleKind::ge;
  diag.strictly_monotone = is_strictly_monotone(curve, increasing);
  diag.valid = true;
  for (Index j = 0; j < curve.size(); ++j) {
    if (static_cast<int>(j) == d) continue;
    const bool before = static_cast<int>(j) < d;
    if (increasing) {
      // ge: outputs before d strictly below, after d strictly above
      if (before ? !(curve[d] > curve[j]) : !(curve[d] < curve[j])) diag.valid = false;
    } else {
      if (before ? !(curve[d] < curve[j]) : !(curve[d] > curve[j])) diag.valid = false;
    }
  }
  return diag;
}

NodeDiagnostic diagnose_categorical(const FuzzyModel& model, Index node, double cut) {
  const FuzzyNode& fn = model.nodes[static_cast<std::size_t>(node)];
  const Vector curve = node_response_curve(model, node);
  NodeDiagnostic diag;
  diag.node = static_cast<int>(node);
  diag.feature = fn.feature;
  diag.module = fn.module;
  diag.decoded_levels = decode_categorical_threshold(model, node, cut);
  diag.valid = true;
  const double low = 1.0 - cut;
  for (Index j = 0; j < curve.size(); ++j)
    if (!(curve[j] > cut || curve[j] < low)) diag.valid = false;
  return diag;
}

}  // namespace

ValidityReport numerical_validity(const FuzzyModel& model) {
  ValidityReport report;
  Index valid = 0, monotone = 0;
  for (Index n = 0; n < model.node_count(); ++n) {
    const FuzzyNode& fn = model.nodes[static_cast<std::size_t>(n)];
    if (fn.module == ModuleKind::be) continue;
    NodeDiagnostic diag = diagnose_numerical(model, n);
    valid += diag.valid ? 1 : 0;
    monotone += diag.strictly_monotone ? 1 : 0;
    ++report.numerical_nodes;
    report.diagnostics.push_back(std::move(diag));
  }
  if (report.numerical_nodes > 0) {
    report.numerical_validity =
        100.0 * static_cast<double>(valid) / static_cast<double>(report.numerical_nodes);
    report.numerical_monotone_pct =
        100.0 * static_cast<double>(monotone) / static_cast<double>(report.numerical_nodes);
  }
  return report;
}

ValidityReport categorical_validity(const FuzzyModel& model, double cut) {
  ValidityReport report;
  Index valid = 0;
  for (Index n = 0; n < model.node_count(); ++n) {
    const FuzzyNode& fn = model.nodes[static_cast<std::size_t>(n)];
    if (fn.module != ModuleKind::be) continue;
    NodeDiagnostic diag = diagnose_categorical(model, n, cut);
    valid += diag.valid ? 1 : 0;
    ++report.categorical_nodes;
    report.diagnostics.push_back(std::move(diag));
  }
  if (report.categorical_nodes > 0)
    report.categorical_validity =
        100.0 * static_cast<double>(valid) / static_cast<double>(report.categorical_nodes);
  return report;
}

ValidityReport validity_report(const FuzzyModel& model, double cut) {
  ValidityReport num = numerical_validity(model);
  ValidityReport cat = categorical_validity(model, cut);
  ValidityReport out = num;
  out.categorical_validity = cat.categorical_validity;
  out.categorical_nodes = cat.categorical_nodes;
  for (NodeDiagnostic& d : cat.diagnostics) out.diagnostics.push_back(std::move(d));
  return out;
}

std::vector<DecodedRule> extract_rules_report(const FuzzyModel& model, double cut,
                                              const std::vector<std::string>& redact) {
  auto redacted = [&](const std::string& name) {
    return std::find(redact.begin(), redact.end(), name) != redact.end();
  };
  std::vector<DecodedRule> out;
  for (Index r = 0; r < model.rule_count(); ++r) {
    DecodedRule rule;
    rule.rule_index = static_cast<int>(r);
    rule.weight_negative = model.head_w.value(r, 0);
    rule.weight_positive = model.head_w.value(r, 1);
    rule.weight = rule.weight_positive - rule.weight_negative;
    const auto& slots = model.slots[static_cast<std::size_t>(r)];
    const auto& conds = model.rules.rules[static_cast<std::size_t>(r)].conditions;
    for (std::size_t s = 0; s < slots.size(); ++s) {
      if (slots[s].padding) continue;
      const Index node = slots[s].node;
      const FuzzyNode& fn = model.nodes[static_cast<std::size_t>(node)];
      const FeatureSpec& spec = model.features[static_cast<std::size_t>(fn.feature)];
      DecodedCondition dc;
      dc.feature = spec.name;
      if (redacted(spec.name)) {
        dc.redacted = true;
        rule.conditions.push_back(std::move(dc));
        continue;
      }
      if (fn.module == ModuleKind::be) {
        dc.glyph = conds[s].op == CondOp::not_in_set ? "not in" : "in";
        for (int level : decode_categorical_threshold(model, node, cut))
          dc.levels.push_back(spec.levels[static_cast<std::size_t>(level)]);
      } else {
        const bool gt = conds[s].op == CondOp::gt;
        dc.glyph = gt ? ">" : "<=";
        const int d = decode_numerical_threshold(model, node);
        dc.threshold_bin = d;
        const auto& edges = model.bin_maps[static_cast<std::size_t>(fn.feature)].edges;
        if (d > 0 && !edges.empty()) {
          dc.threshold_value = edges[static_cast<std::size_t>(std::min(d - 1, static_cast<int>(edges.size()) - 1))];
        } else {
          dc.unbounded_low = true;
        }
      }
      rule.conditions.push_back(std::move(dc));
    }
    out.push_back(std::move(rule));
  }
  return out;
}

ResponseTable operator_response_table(const FuzzyModel& model, Index node,
                                      const std::vector<int>& probe_bins) {
  const FuzzyNode& fn = model.nodes[static_cast<std::size_t>(node)];
  const FeatureSpec& spec = model.features[static_cast<std::size_t>(fn.feature)];
  const Vector curve = node_response_curve(model, node);
  ResponseTable table;
  table.node = static_cast<int>(node);
  table.feature = spec.name;
  table.module = fn.module == ModuleKind::le ? "le" : (fn.module == ModuleKind::ge ? "ge" : "be");
  for (int b : probe_bins) {
    if (b < 0 || b >= curve.size())
      throw NsdtError("operator_response_table: probe bin out of range");
    table.probe_bins.push_back(b);
    table.outputs.push_back(curve[b]);
  }
  return table;
}

// ---------------------------------------------------------------------------
// renderers
// ---------------------------------------------------------------------------

namespace {

std::string ordinal(int index) {
  const int n = index + 1;  // bins rendered 1-based
  const int mod100 = n % 100;
  const char* suffix = "th";
  if (mod100 < 11 || mod100 > 13) {
    switch (n % 10) {
      case 1: suffix = "st"; break;
      case 2: suffix = "nd"; break;
      case 3: suffix = "rd"; break;
    }
  }
  return std::to_string(n) + suffix;
}

}  // namespace

std::string render_response_table(const ResponseTable& table) {
  std::ostringstream out;
  out << table.module << " outputs for feature '" << table.feature << "', node "
      << table.node << "\n";
  out << "  bin        output\n";
  for (std::size_t i = 0; i < table.probe_bins.size(); ++i)
    out << "  " << std::left << std::setw(10) << ordinal(table.probe_bins[i]) << std::fixed
        << std::setprecision(3) << table.outputs[i] << "\n";
  return out.str();
}

std::string render_decoded_rules(const std::vector<DecodedRule>& rules) {
  std::ostringstream out;
  for (const DecodedRule& rule : rules) {
    out << "rule " << rule.rule_index << "  weight " << std::showpos << std::fixed
        << std::setprecision(3) << rule.weight << std::noshowpos << "  [w- "
        << std::setprecision(3) << rule.weight_negative << ", w+ " << rule.weight_positive
        << "]\n";
    if (rule.conditions.empty()) {
      out << "    (always active)\n";
      continue;
    }
    for (const DecodedCondition& c : rule.conditions) {
      if (c.redacted) {
        out << "    [redacted]\n";
        continue;
      }
      out << "    " << c.feature << " " << c.glyph << " ";
      if (!c.glyph.empty() && (c.glyph == "in" || c.glyph == "not in")) {
        out << "[";
        for (std::size_t i = 0; i < c.levels.size(); ++i)
          out << (i ? ", " : "") << "'" << c.levels[i] << "'";
        out << "]";
      } else if (c.unbounded_low) {
        out << "(lowest bin)";
      } else {
        out << std::defaultfloat << std::setprecision(6) << c.threshold_value;
      }
      out << "\n";
    }
  }
  return out.str();
}

std::string render_validity_report(const ValidityReport& report) {
  std::ostringstream out;
  out << std::fixed << std::setprecision(1);
  out << "numerical nodes: " << report.numerical_nodes << ", valid "
      << report.numerical_validity << "%, strictly monotone " << report.numerical_monotone_pct
      << "%\n";
  out << "categorical nodes: " << report.categorical_nodes << ", valid "
      << report.categorical_validity << "%\n";
  return out.str();
}

}  // namespace nsdt
