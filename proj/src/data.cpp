#include "nsdt/data.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <numeric>
#include <set>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

namespace nsdt {

namespace fs = std::filesystem;
using nlohmann::json;

int FeatureSpec::level_index(const std::string& level) const {
  auto it = std::find(levels.begin(), levels.end(), level);
  if (it == levels.end()) return -1;
  return static_cast<int>(it - levels.begin());
}

int BinMapping::bin_of(double x) const {
  // number of edges <= x
  auto it = std::upper_bound(edges.begin(), edges.end(), x);
  return static_cast<int>(it - edges.begin());
}

std::vector<Index> EncodedDataset::rows_with(SplitTag tag) const {
  std::vector<Index> out;
  for (Index i = 0; i < static_cast<Index>(split.size()); ++i)
    if (split[i] == tag) out.push_back(i);
  return out;
}

// ---------------------------------------------------------------------------
// dataset schemas
// ---------------------------------------------------------------------------

namespace {

DatasetSchema make_higgs_schema() {
  DatasetSchema s;
  s.id = "higgs";
  s.has_header = true;
  s.na_markers = {"", "?", "NA"};
  s.train_files = {"higgs.csv"};
  const char* names[] = {
      "lepton_pT",  "lepton_eta", "lepton_phi", "missing_energy_magnitude",
      "missing_energy_phi", "jet1pt", "jet1eta", "jet1phi", "jet1b-tag",
      "jet2pt", "jet2eta", "jet2phi", "jet2b-tag", "jet3pt", "jet3eta",
      "jet3phi", "jet3b-tag", "jet4pt", "jet4eta", "jet4phi", "jet4b-tag",
      "m_jj", "m_jjj", "m_lv", "m_jlv", "m_bb", "m_wbb", "m_wwbb"};
  for (const char* n : names) s.columns.push_back({n, ColumnDef::kNum});
  s.columns.push_back({"class", ColumnDef::kTarget});
  s.source_urls = {"https://www.openml.org/search?type=data&sort=runs&id=23512&status=active"};
  return s;
}

DatasetSchema make_census_schema() {
  DatasetSchema s;
  s.id = "census";
  s.has_header = false;
  s.na_markers = {"", "?"};
  s.train_files = {"census-income.data"};
  s.test_files = {"census-income.test"};
  s.drop_conflicts = true;
  s.positive_values = {"50000+."};
  struct Def { const char* name; ColumnDef::Role role; };
  const Def defs[] = {
      {"age", ColumnDef::kNum},
      {"class_of_worker", ColumnDef::kCat},
      {"det_industry_recode", ColumnDef::kCat},
      {"det_occupation_recode", ColumnDef::kCat},
      {"education", ColumnDef::kCat},
      {"wage_per_hour", ColumnDef::kNum},
      {"enroll_in_edu_inst", ColumnDef::kCat},
      {"marital_stat", ColumnDef::kCat},
      {"major_industry_code", ColumnDef::kCat},
      {"major_occupation_code", ColumnDef::kCat},
      {"race", ColumnDef::kCat},
      {"hispanic_origin", ColumnDef::kCat},
      {"sex", ColumnDef::kCat},
      {"member_of_labor_union", ColumnDef::kCat},
      {"reason_for_unemployment", ColumnDef::kCat},
      {"full_or_part_time_emp", ColumnDef::kCat},
      {"capital_gains", ColumnDef::kNum},
      {"capital_losses", ColumnDef::kNum},
      {"dividends_from_stocks", ColumnDef::kNum},
      {"tax_filer_stat", ColumnDef::kCat},
      {"region_of_prev_residence", ColumnDef::kCat},
      {"state_of_prev_residence", ColumnDef::kCat},
      {"det_hh_family_stat", ColumnDef::kCat},
      {"det_hh_summary", ColumnDef::kCat},
      {"instance_weight", ColumnDef::kIgnore},
      {"mig_chg_msa", ColumnDef::kCat},
      {"mig_chg_reg", ColumnDef::kCat},
      {"mig_move_reg", ColumnDef::kCat},
      {"live_here_1_year_ago", ColumnDef::kCat},
      {"mig_prev_sunbelt", ColumnDef::kCat},
      {"num_persons_worked_for_employer", ColumnDef::kNum},
      {"family_members_under_18", ColumnDef::kCat},
      {"country_of_birth_father", ColumnDef::kCat},
      {"country_of_birth_mother", ColumnDef::kCat},
      {"country_of_birth_self", ColumnDef::kCat},
      {"citizenship", ColumnDef::kCat},
      {"own_business_or_self_employed", ColumnDef::kCat},
      {"fill_inc_questionnaire_vet", ColumnDef::kCat},
      {"veterans_benefits", ColumnDef::kCat},
      {"weeks_worked_in_year", ColumnDef::kNum},
      {"year", ColumnDef::kCat},
      {"income", ColumnDef::kTarget},
  };
  for (const Def& d : defs) s.columns.push_back({d.name, d.role});
  s.source_urls = {
      "https://archive.ics.uci.edu/ml/datasets/Census-Income+%28KDD%29",
      "https://archive.ics.uci.edu/ml/machine-learning-databases/census-income-mld/census-income.data.gz",
      "https://archive.ics.uci.edu/ml/machine-learning-databases/census-income-mld/census-income.test.gz"};
  return s;
}

DatasetSchema make_credit_schema() {
  DatasetSchema s;
  s.id = "credit";
  s.has_header = true;
  s.na_markers = {"", "NA"};
  s.train_files = {"cs-training.csv"};
  s.columns.push_back({"row_id", ColumnDef::kIgnore});
  s.columns.push_back({"SeriousDlqin2yrs", ColumnDef::kTarget});
  const char* names[] = {
      "RevolvingUtilizationOfUnsecuredLines",
      "age",
      "NumberOfTime30-59DaysPastDueNotWorse",
      "DebtRatio",
      "MonthlyIncome",
      "NumberOfOpenCreditLinesAndLoans",
      "NumberOfTimes90DaysLate",
      "NumberRealEstateLoansOrLines",
      "NumberOfTime60-89DaysPastDueNotWorse",
      "NumberOfDependents"};
  for (const char* n : names) s.columns.push_back({n, ColumnDef::kNum});
  s.source_urls = {"https://www.kaggle.com/c/GiveMeSomeCredit"};
  return s;
}

DatasetSchema make_insurance_schema() {
  DatasetSchema s;
  s.id = "insurance";
  s.has_header = true;
  s.na_markers = {"", "NA"};
  s.train_files = {"train.csv"};
  s.continuous_target = true;
  s.columns.push_back({"id", ColumnDef::kIgnore});
  for (int i = 1; i <= 116; ++i)
    s.columns.push_back({"cat" + std::to_string(i), ColumnDef::kCat});
  for (int i = 1; i <= 14; ++i)
    s.columns.push_back({"cont" + std::to_string(i), ColumnDef::kNum});
  s.columns.push_back({"loss", ColumnDef::kTarget});
  s.source_urls = {"https://www.kaggle.com/competitions/allstate-claims-severity/overview"};
  return s;
}

const std::map<std::string, DatasetSchema>& schema_registry() {
  static const std::map<std::string, DatasetSchema> reg = [] {
    std::map<std::string, DatasetSchema> m;
    for (DatasetSchema s : {make_higgs_schema(), make_census_schema(),
                            make_credit_schema(), make_insurance_schema()})
      m.emplace(s.id, std::move(s));
    return m;
  }();
  return reg;
}

// Minimal delimited-text reader: quoted fields, CRLF, embedded delimiters.
std::vector<std::vector<std::string>> parse_delimited(const std::string& text, char delim) {
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> row;
  std::string cell;
  bool in_quotes = false;
  bool row_has_content = false;
  auto end_cell = [&] {
    row.push_back(cell);
    cell.clear();
  };
  auto end_row = [&] {
    end_cell();
    rows.push_back(std::move(row));
    row.clear();
    row_has_content = false;
  };
  for (std::size_t i = 0; i < text.size(); ++i) {
    char c = text[i];
    if (in_quotes) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          cell.push_back('"');
          ++i;
        } else {
          in_quotes = false;
        }
      } else {
        cell.push_back(c);
      }
      continue;
    }
    switch (c) {
      case '"': in_quotes = true; row_has_content = true; break;
      case '\r': break;
      case '\n':
        if (row_has_content || !cell.empty() || !row.empty()) end_row();
        break;
      default:
        if (c == delim) {
          end_cell();
          row_has_content = true;
        } else {
          cell.push_back(c);
          row_has_content = true;
        }
    }
  }
  if (row_has_content || !cell.empty() || !row.empty()) end_row();
  return rows;
}

bool parse_double(const std::string& s, double* out) {
  const char* begin = s.c_str();
  char* end = nullptr;
  double v = std::strtod(begin, &end);
  if (end == begin) return false;
  while (*end != '\0' && std::isspace(static_cast<unsigned char>(*end))) ++end;
  if (*end != '\0') return false;
  *out = v;
  return true;
}

}  // namespace

const DatasetSchema& dataset_schema(const std::string& dataset_id) {
  const auto& reg = schema_registry();
  auto it = reg.find(dataset_id);
  if (it == reg.end()) throw NsdtError("unknown dataset_id: " + dataset_id);
  return it->second;
}

std::vector<std::string> known_dataset_ids() {
  std::vector<std::string> out;
  for (const auto& [id, _] : schema_registry()) out.push_back(id);
  return out;
}

// ---------------------------------------------------------------------------
// load_and_clean
// ---------------------------------------------------------------------------

DataTable load_and_clean(const std::string& data_dir, const std::string& dataset_id,
                         CleanReport* report) {
  const DatasetSchema& schema = dataset_schema(dataset_id);
  CleanReport rep;
  rep.dataset_id = dataset_id;

  struct ParsedRow {
    std::vector<std::string> cells;  // feature cells only, trimmed
    std::string target;
    std::uint8_t predefined;
  };
  std::vector<ParsedRow> parsed;

  std::vector<std::size_t> feature_cols, target_cols;
  for (std::size_t c = 0; c < schema.columns.size(); ++c) {
    if (schema.columns[c].role == ColumnDef::kNum || schema.columns[c].role == ColumnDef::kCat)
      feature_cols.push_back(c);
    else if (schema.columns[c].role == ColumnDef::kTarget)
      target_cols.push_back(c);
  }
  if (target_cols.size() != 1) throw NsdtError("schema must declare exactly one target");
  const std::size_t target_col = target_cols[0];

  auto is_na = [&](const std::string& cell) {
    return std::find(schema.na_markers.begin(), schema.na_markers.end(), cell) !=
           schema.na_markers.end();
  };

  auto consume_file = [&](const std::string& file, std::uint8_t tag) {
    fs::path path = fs::path(data_dir) / dataset_id / file;
    if (!fs::exists(path))
      throw NsdtError("missing source file: " + path.string() +
                      " (fetch it or generate a synthetic stand-in)");
    auto rows = parse_delimited(read_text_file(path.string()), schema.delimiter);
    std::size_t first = 0;
    if (schema.has_header) {
      if (rows.empty()) throw NsdtError("empty file: " + path.string());
      if (rows[0].size() != schema.columns.size())
        throw NsdtError(path.string() + ": expected " + std::to_string(schema.columns.size()) +
                        " columns, found " + std::to_string(rows[0].size()));
      for (std::size_t c = 0; c < rows[0].size(); ++c) {
        std::string name = trim(rows[0][c]);
        if (!name.empty() && !schema.columns[c].name.empty() &&
            schema.columns[c].role != ColumnDef::kIgnore && name != schema.columns[c].name)
          throw NsdtError(path.string() + ": header mismatch at column " + std::to_string(c) +
                          ": expected '" + schema.columns[c].name + "', found '" + name + "'");
      }
      first = 1;
    }
    for (std::size_t r = first; r < rows.size(); ++r) {
      if (rows[r].size() != schema.columns.size()) continue;  // ragged line
      ++rep.rows_before;
      ParsedRow pr;
      pr.predefined = tag;
      bool missing = false;
      for (std::size_t c : feature_cols) {
        std::string cell = trim(rows[r][c]);
        if (is_na(cell)) missing = true;
        pr.cells.push_back(std::move(cell));
      }
      std::string t = trim(rows[r][target_col]);
      if (is_na(t)) missing = true;
      pr.target = std::move(t);
      if (missing) {
        ++rep.dropped_missing;
        continue;
      }
      parsed.push_back(std::move(pr));
    }
  };

  for (const std::string& f : schema.train_files) consume_file(f, kTrain);
  for (const std::string& f : schema.test_files) consume_file(f, kTest);

  // exact duplicates (feature cells + label): keep the first occurrence
  std::unordered_set<std::string> seen;
  std::vector<ParsedRow> unique_rows;
  unique_rows.reserve(parsed.size());
  for (ParsedRow& pr : parsed) {
    std::string key;
    for (const std::string& c : pr.cells) {
      key += c;
      key.push_back('\x1f');
    }
    key += pr.target;
    if (!seen.insert(key).second) {
      ++rep.dropped_duplicates;
      continue;
    }
    unique_rows.push_back(std::move(pr));
  }

  // conflicting rows: identical feature tuples, differing labels -> all dropped
  if (schema.drop_conflicts) {
    std::unordered_map<std::string, std::set<std::string>> labels_by_features;
    auto fkey = [](const ParsedRow& pr) {
      std::string key;
      for (const std::string& c : pr.cells) {
        key += c;
        key.push_back('\x1f');
      }
      return key;
    };
    for (const ParsedRow& pr : unique_rows) labels_by_features[fkey(pr)].insert(pr.target);
    std::vector<ParsedRow> kept;
    kept.reserve(unique_rows.size());
    for (ParsedRow& pr : unique_rows) {
      if (labels_by_features[fkey(pr)].size() > 1) {
        ++rep.dropped_conflicts;
        continue;
      }
      kept.push_back(std::move(pr));
    }
    unique_rows = std::move(kept);
  }

  if (unique_rows.empty()) throw NsdtError("dataset empty after cleaning: " + dataset_id);
  rep.rows_after = unique_rows.size();

  // typed columns
  DataTable table;
  const Index n = static_cast<Index>(unique_rows.size());
  for (std::size_t k = 0; k < feature_cols.size(); ++k) {
    const ColumnDef& def = schema.columns[feature_cols[k]];
    Column col;
    col.name = def.name;
    col.kind = def.role == ColumnDef::kNum ? FeatureKind::numerical : FeatureKind::categorical;
    if (col.kind == FeatureKind::numerical) {
      col.values.resize(n);
      for (Index r = 0; r < n; ++r) {
        double v = 0;
        if (!parse_double(unique_rows[r].cells[k], &v))
          throw NsdtError("non-numeric cell in column " + col.name + ": '" +
                          unique_rows[r].cells[k] + "'");
        col.values[r] = v;
      }
    } else {
      col.labels.resize(n);
      for (Index r = 0; r < n; ++r) col.labels[r] = unique_rows[r].cells[k];
    }
    table.columns.push_back(std::move(col));
  }

  table.target.resize(n);
  for (Index r = 0; r < n; ++r) {
    const std::string& t = unique_rows[r].target;
    if (schema.continuous_target || schema.positive_values.empty()) {
      double v = 0;
      if (!parse_double(t, &v)) throw NsdtError("non-numeric target: '" + t + "'");
      table.target[r] = schema.continuous_target ? v : (v >= 0.5 ? 1.0 : 0.0);
    } else {
      bool pos = std::find(schema.positive_values.begin(), schema.positive_values.end(), t) !=
                 schema.positive_values.end();
      table.target[r] = pos ? 1.0 : 0.0;
    }
  }

  if (!schema.test_files.empty()) {
    table.predefined.resize(static_cast<std::size_t>(n));
    for (Index r = 0; r < n; ++r) table.predefined[r] = unique_rows[r].predefined;
  }

  if (report) *report = rep;
  return table;
}

// ---------------------------------------------------------------------------
// binarize / discretize / split / subsample
// ---------------------------------------------------------------------------

IntVector binarize_top_decile(const Vector& targets) {
  const Index n = targets.size();
  if (n < 10) throw NsdtError("binarize_top_decile: need at least 10 samples");
  std::vector<double> sorted(targets.data(), targets.data() + n);
  std::sort(sorted.begin(), sorted.end());
  const Index idx = static_cast<Index>(std::ceil(0.9 * static_cast<double>(n)));
  const double threshold = sorted[std::min(idx, n - 1)];
  IntVector out(n);
  for (Index i = 0; i < n; ++i) out[i] = targets[i] >= threshold ? 1 : 0;
  return out;
}

BinMapping fit_discretizer(const Vector& train_column, int bin_count, int feature_index,
                           bool equal_width) {
  if (bin_count < 2) throw NsdtError("fit_discretizer: bin_count must be >= 2");
  const Index n = train_column.size();
  if (n == 0) throw NsdtError("fit_discretizer: empty column");
  std::vector<double> sorted(train_column.data(), train_column.data() + n);
  std::sort(sorted.begin(), sorted.end());
  if (sorted.front() == sorted.back())
    throw NsdtError("fit_discretizer: constant column (single bin), feature " +
                    std::to_string(feature_index));

  BinMapping map;
  map.feature = feature_index;
  if (equal_width) {
    const double lo = sorted.front(), hi = sorted.back();
    for (int k = 1; k < bin_count; ++k)
      map.edges.push_back(lo + (hi - lo) * static_cast<double>(k) / bin_count);
  } else {
    for (int k = 1; k < bin_count; ++k) {
      Index pos = static_cast<Index>(static_cast<double>(k) * static_cast<double>(n) / bin_count);
      pos = std::min(pos, n - 1);
      map.edges.push_back(sorted[pos]);
    }
  }
  map.edges.erase(std::unique(map.edges.begin(), map.edges.end()), map.edges.end());
  // keep edges strictly above the column minimum so bin 0 is non-empty
  while (!map.edges.empty() && map.edges.front() <= sorted.front())
    map.edges.erase(map.edges.begin());
  if (map.edges.empty())
    throw NsdtError("fit_discretizer: degenerate column, feature " + std::to_string(feature_index));
  return map;
}

std::vector<std::uint8_t> split_rows(Index n, const std::array<double, 3>& ratios,
                                     std::uint64_t seed,
                                     const std::vector<std::uint8_t>& predefined) {
  std::vector<std::uint8_t> tags(static_cast<std::size_t>(n), kTrain);
  Rng rng(seed);
  if (!predefined.empty()) {
    if (static_cast<Index>(predefined.size()) != n)
      throw NsdtError("split_rows: predefined size mismatch");
    std::vector<Index> train_rows;
    for (Index i = 0; i < n; ++i) {
      tags[i] = predefined[i];
      if (predefined[i] == kTrain) train_rows.push_back(i);
    }
    rng.shuffle(train_rows);
    const Index n_valid = static_cast<Index>(train_rows.size() / 10);
    for (Index i = 0; i < n_valid; ++i) tags[train_rows[i]] = kValid;
    return tags;
  }
  const double sum = ratios[0] + ratios[1] + ratios[2];
  if (std::abs(sum - 1.0) > 1e-9) throw NsdtError("split_rows: ratios must sum to 1");
  std::array<Index, 3> counts{};
  Index assigned = 0;
  for (int k = 0; k < 3; ++k) {
    counts[k] = static_cast<Index>(std::floor(ratios[k] * static_cast<double>(n)));
    assigned += counts[k];
  }
  for (int k = 0; assigned < n; k = (k + 1) % 3, ++assigned) ++counts[k];
  std::vector<Index> order(n);
  std::iota(order.begin(), order.end(), Index{0});
  rng.shuffle(order);
  Index pos = 0;
  const SplitTag tag_of[3] = {kTrain, kValid, kTest};
  for (int k = 0; k < 3; ++k)
    for (Index i = 0; i < counts[k]; ++i) tags[order[pos++]] = tag_of[k];
  return tags;
}

DataTable subsample_stratified(const DataTable& table, Index cap, std::uint64_t seed) {
  const Index n = table.rows();
  if (cap >= n) return table;
  std::vector<Index> pos_rows, neg_rows;
  for (Index i = 0; i < n; ++i)
    (table.target[i] >= 0.5 ? pos_rows : neg_rows).push_back(i);
  const double frac = static_cast<double>(cap) / static_cast<double>(n);
  Index take_pos = static_cast<Index>(std::floor(frac * static_cast<double>(pos_rows.size())));
  Index take_neg = cap - take_pos;
  if (take_neg > static_cast<Index>(neg_rows.size())) {
    take_pos += take_neg - static_cast<Index>(neg_rows.size());
    take_neg = static_cast<Index>(neg_rows.size());
  }
  Rng rng(seed);
  auto pick = [&](std::vector<Index>& rows, Index k) {
    rng.shuffle(rows);
    return std::vector<Index>(rows.begin(), rows.begin() + k);
  };
  std::vector<Index> keep = pick(pos_rows, take_pos);
  std::vector<Index> negs = pick(neg_rows, take_neg);
  keep.insert(keep.end(), negs.begin(), negs.end());
  std::sort(keep.begin(), keep.end());

  DataTable out;
  out.target.resize(cap);
  for (Index i = 0; i < cap; ++i) out.target[i] = table.target[keep[i]];
  if (!table.predefined.empty()) {
    out.predefined.resize(static_cast<std::size_t>(cap));
    for (Index i = 0; i < cap; ++i) out.predefined[i] = table.predefined[keep[i]];
  }
  for (const Column& col : table.columns) {
    Column c;
    c.name = col.name;
    c.kind = col.kind;
    if (col.kind == FeatureKind::numerical) {
      c.values.resize(cap);
      for (Index i = 0; i < cap; ++i) c.values[i] = col.values[keep[i]];
    } else {
      c.labels.resize(cap);
      for (Index i = 0; i < cap; ++i) c.labels[i] = col.labels[keep[i]];
    }
    out.columns.push_back(std::move(c));
  }
  return out;
}

EncodedDataset encode_dataset(const DataTable& table, const std::string& dataset_id,
                              const EncodeConfig& config) {
  const Index n = table.rows();
  if (n == 0) throw NsdtError("encode_dataset: empty table");
  for (Index i = 0; i < n; ++i)
    if (table.target[i] != 0.0 && table.target[i] != 1.0)
      throw NsdtError("encode_dataset: target must be binary (binarize first)");

  EncodedDataset ds;
  ds.dataset_id = dataset_id;
  ds.seed = config.seed;
  ds.split = split_rows(n, config.ratios, config.seed, table.predefined);
  ds.target.resize(n);
  for (Index i = 0; i < n; ++i) ds.target[i] = static_cast<int>(table.target[i]);

  std::vector<Index> train_rows;
  for (Index i = 0; i < n; ++i)
    if (ds.split[i] == kTrain) train_rows.push_back(i);
  if (train_rows.empty()) throw NsdtError("encode_dataset: empty training split");

  const int f_count = static_cast<int>(table.columns.size());
  ds.codes.resize(n, f_count);
  for (int f = 0; f < f_count; ++f) {
    const Column& col = table.columns[f];
    FeatureSpec spec;
    spec.name = col.name;
    spec.kind = col.kind;
    BinMapping map;
    map.feature = f;
    if (col.kind == FeatureKind::numerical) {
      Vector train_vals(static_cast<Index>(train_rows.size()));
      for (std::size_t k = 0; k < train_rows.size(); ++k) train_vals[static_cast<Index>(k)] = col.values[train_rows[k]];
      try {
        map = fit_discretizer(train_vals, config.bin_count, f, config.equal_width);
        spec.bin_count = map.bin_count();
        for (Index r = 0; r < n; ++r) ds.codes(r, f) = map.bin_of(col.values[r]);
      } catch (const NsdtError&) {
        spec.degenerate = true;
        spec.bin_count = 1;
        map.edges.clear();
        for (Index r = 0; r < n; ++r) ds.codes(r, f) = 0;
      }
    } else {
      std::set<std::string> distinct(col.labels.begin(), col.labels.end());
      spec.levels.assign(distinct.begin(), distinct.end());
      if (spec.levels.size() < 2) spec.degenerate = true;
      std::unordered_map<std::string, int> index;
      for (std::size_t k = 0; k < spec.levels.size(); ++k)
        index[spec.levels[k]] = static_cast<int>(k);
      for (Index r = 0; r < n; ++r) ds.codes(r, f) = index[col.labels[r]];
    }
    ds.features.push_back(std::move(spec));
    ds.bins.push_back(std::move(map));
  }
  return ds;
}

// ---------------------------------------------------------------------------
// noise injection + association check
// ---------------------------------------------------------------------------

DataTable inject_noise(const DataTable& clean, const NoiseConfig& cfg, NoiseReport* report) {
  if (cfg.feature_fraction <= 0.0 || cfg.feature_fraction > 1.0 ||
      cfg.input_fraction <= 0.0 || cfg.input_fraction > 1.0 || cfg.std_fraction <= 0.0)
    throw NsdtError("inject_noise: fractions must lie in (0, 1]");
  const int f_count = static_cast<int>(clean.columns.size());
  const Index n = clean.rows();
  const int k = static_cast<int>(std::ceil(cfg.feature_fraction * f_count));
  if (k <= 0) throw NsdtError("inject_noise: zero features selected");

  Rng rng(cfg.seed);
  std::vector<int> selected = rng.sample_without_replacement(f_count, k);
  std::sort(selected.begin(), selected.end());

  const Index unchanged = static_cast<Index>(
      std::floor((1.0 - cfg.input_fraction) * static_cast<double>(n)));
  const Index corrupted_count = n - unchanged;

  DataTable out = clean;
  NoiseReport rep;
  rep.config = cfg;
  for (int f : selected) {
    Column& col = out.columns[static_cast<std::size_t>(f)];
    NoisedFeature nf;
    nf.name = col.name;
    nf.kind = col.kind;
    nf.corrupted_entries = corrupted_count;
    if (col.kind == FeatureKind::numerical) {
      const double m = col.values.maxCoeff();
      nf.noise_mean = m;
      nf.noise_std = cfg.std_fraction * m;
      Vector noise(n);
      for (Index i = 0; i < n; ++i) noise[i] = rng.normal(nf.noise_mean, nf.noise_std);
      std::vector<int> keep_pos = rng.sample_without_replacement(
          static_cast<int>(n), static_cast<int>(unchanged));
      for (int p : keep_pos) noise[p] = 0.0;
      col.values += noise;
    } else {
      std::set<std::string> distinct(col.labels.begin(), col.labels.end());
      std::vector<std::string> levels(distinct.begin(), distinct.end());
      std::vector<int> hit = rng.sample_without_replacement(
          static_cast<int>(n), static_cast<int>(corrupted_count));
      for (int p : hit)
        col.labels[static_cast<std::size_t>(p)] =
            levels[static_cast<std::size_t>(rng.uniform_int(0, static_cast<int>(levels.size()) - 1))];
    }
    rep.features.push_back(std::move(nf));
  }
  if (report) *report = rep;
  return out;
}

namespace {

Vector average_ranks(const Vector& x) {
  const Index n = x.size();
  std::vector<Index> order(n);
  std::iota(order.begin(), order.end(), Index{0});
  std::sort(order.begin(), order.end(), [&](Index a, Index b) { return x[a] < x[b]; });
  Vector ranks(n);
  Index i = 0;
  while (i < n) {
    Index j = i;
    while (j + 1 < n && x[order[j + 1]] == x[order[i]]) ++j;
    const double avg = 0.5 * static_cast<double>(i + j) + 1.0;  // 1-based average rank
    for (Index t = i; t <= j; ++t) ranks[order[t]] = avg;
    i = j + 1;
  }
  return ranks;
}

}  // namespace

double spearman_correlation(const Vector& x, const Vector& y) {
  if (x.size() != y.size() || x.size() < 2) throw NsdtError("spearman: bad inputs");
  Vector rx = average_ranks(x), ry = average_ranks(y);
  const double mx = rx.mean(), my = ry.mean();
  rx.array() -= mx;
  ry.array() -= my;
  const double denom = std::sqrt(rx.squaredNorm() * ry.squaredNorm());
  if (denom < 1e-12) return 0.0;
  return rx.dot(ry) / denom;
}

double cramers_v_bias_corrected(const std::vector<int>& x, int x_card,
                                const std::vector<int>& y, int y_card) {
  const std::size_t n = x.size();
  if (n != y.size() || n < 2 || x_card < 1 || y_card < 1)
    throw NsdtError("cramers_v: bad inputs");
  Matrix table = Matrix::Zero(x_card, y_card);
  for (std::size_t i = 0; i < n; ++i) table(x[i], y[i]) += 1.0;
  Vector row_sum = table.rowwise().sum(), col_sum = table.colwise().sum();
  const double total = static_cast<double>(n);
  double chi2 = 0.0;
  for (int r = 0; r < x_card; ++r)
    for (int c = 0; c < y_card; ++c) {
      const double expected = row_sum[r] * col_sum[c] / total;
      if (expected > 0) {
        const double d = table(r, c) - expected;
        chi2 += d * d / expected;
      }
    }
  const double phi2 = chi2 / total;
  const double r = static_cast<double>(x_card), c = static_cast<double>(y_card);
  const double phi2_corr = std::max(0.0, phi2 - (r - 1.0) * (c - 1.0) / (total - 1.0));
  const double r_corr = r - (r - 1.0) * (r - 1.0) / (total - 1.0);
  const double c_corr = c - (c - 1.0) * (c - 1.0) / (total - 1.0);
  const double denom = std::min(r_corr - 1.0, c_corr - 1.0);
  if (denom < 1e-12) return 0.0;
  return std::sqrt(phi2_corr / denom);
}

std::vector<AssociationRecord> correlation_drop_check(
    const DataTable& clean, const DataTable& corrupted, const IntVector& target,
    const std::vector<std::string>& corrupted_features) {
  if (clean.columns.size() != corrupted.columns.size())
    throw NsdtError("correlation_drop_check: schema mismatch");
  Vector ty = target.cast<double>();
  std::vector<int> y_codes(target.data(), target.data() + target.size());

  std::vector<AssociationRecord> out;
  for (const std::string& name : corrupted_features) {
    auto find_col = [&](const DataTable& t) -> const Column& {
      for (const Column& c : t.columns)
        if (c.name == name) return c;
      throw NsdtError("correlation_drop_check: unknown feature " + name);
    };
    const Column& before = find_col(clean);
    const Column& after = find_col(corrupted);
    AssociationRecord rec;
    rec.name = name;
    rec.kind = before.kind;
    if (before.kind == FeatureKind::numerical) {
      if ((before.values.array() == before.values[0]).all()) {
        rec.excluded = true;
        out.push_back(rec);
        continue;
      }
      rec.before = spearman_correlation(before.values, ty);
      rec.after = spearman_correlation(after.values, ty);
    } else {
      std::set<std::string> levels(before.labels.begin(), before.labels.end());
      levels.insert(after.labels.begin(), after.labels.end());
      if (levels.size() < 2) {
        rec.excluded = true;
        out.push_back(rec);
        continue;
      }
      std::unordered_map<std::string, int> index;
      int next = 0;
      for (const std::string& l : levels) index[l] = next++;
      auto codes = [&](const Column& c) {
        std::vector<int> v(c.labels.size());
        for (std::size_t i = 0; i < c.labels.size(); ++i) v[i] = index[c.labels[i]];
        return v;
      };
      rec.before = cramers_v_bias_corrected(codes(before), next, y_codes, 2);
      rec.after = cramers_v_bias_corrected(codes(after), next, y_codes, 2);
    }
    const double b = std::abs(rec.before), a = std::abs(rec.after);
    if (b < 1e-12) {
      rec.excluded = true;
    } else {
      rec.relative_drop = (b - a) / b;
    }
    out.push_back(rec);
  }
  return out;
}

// ---------------------------------------------------------------------------
// encoded container I/O
// ---------------------------------------------------------------------------

namespace {

constexpr char kDatasetMagic[8] = {'N', 'S', 'D', 'T', 'D', 'S', '1', '\n'};

void write_raw(std::ofstream& out, const void* data, std::size_t bytes) {
  out.write(static_cast<const char*>(data), static_cast<std::streamsize>(bytes));
}

void read_raw(std::ifstream& in, void* data, std::size_t bytes) {
  in.read(static_cast<char*>(data), static_cast<std::streamsize>(bytes));
  if (!in) throw NsdtError("truncated dataset container");
}

}  // namespace

void save_encoded(const EncodedDataset& ds, const std::string& path) {
  json header;
  header["dataset_id"] = ds.dataset_id;
  header["seed"] = ds.seed;
  header["rows"] = ds.codes.rows();
  header["cols"] = ds.codes.cols();
  header["features"] = json::array();
  for (std::size_t f = 0; f < ds.features.size(); ++f) {
    const FeatureSpec& spec = ds.features[f];
    json jf;
    jf["name"] = spec.name;
    jf["kind"] = spec.kind == FeatureKind::numerical ? "num" : "cat";
    jf["bin_count"] = spec.bin_count;
    jf["levels"] = spec.levels;
    jf["degenerate"] = spec.degenerate;
    jf["edges"] = ds.bins[f].edges;
    header["features"].push_back(std::move(jf));
  }
  const std::string head = header.dump();

  std::ofstream out(path, std::ios::binary);
  if (!out) throw NsdtError("cannot write " + path);
  write_raw(out, kDatasetMagic, sizeof(kDatasetMagic));
  const std::uint64_t head_len = head.size();
  write_raw(out, &head_len, sizeof(head_len));
  write_raw(out, head.data(), head.size());
  // row-major int32 codes, int32 target, u8 split tags (little-endian host)
  for (Index r = 0; r < ds.codes.rows(); ++r)
    for (Index c = 0; c < ds.codes.cols(); ++c) {
      const std::int32_t v = ds.codes(r, c);
      write_raw(out, &v, sizeof(v));
    }
  for (Index r = 0; r < ds.target.size(); ++r) {
    const std::int32_t v = ds.target[r];
    write_raw(out, &v, sizeof(v));
  }
  write_raw(out, ds.split.data(), ds.split.size());
  if (!out) throw NsdtError("write failed: " + path);
}

EncodedDataset load_encoded(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw NsdtError("cannot open " + path);
  char magic[8];
  read_raw(in, magic, sizeof(magic));
  if (std::memcmp(magic, kDatasetMagic, sizeof(magic)) != 0)
    throw NsdtError("not a dataset container: " + path);
  std::uint64_t head_len = 0;
  read_raw(in, &head_len, sizeof(head_len));
  std::string head(head_len, '\0');
  read_raw(in, head.data(), head_len);
  json header = json::parse(head);

  EncodedDataset ds;
  ds.dataset_id = header.at("dataset_id").get<std::string>();
  ds.seed = header.at("seed").get<std::uint64_t>();
  const Index rows = header.at("rows").get<Index>();
  const Index cols = header.at("cols").get<Index>();
  for (const json& jf : header.at("features")) {
    FeatureSpec spec;
    spec.name = jf.at("name").get<std::string>();
    spec.kind = jf.at("kind").get<std::string>() == "num" ? FeatureKind::numerical
                                                          : FeatureKind::categorical;
    spec.bin_count = jf.at("bin_count").get<int>();
    spec.levels = jf.at("levels").get<std::vector<std::string>>();
    spec.degenerate = jf.at("degenerate").get<bool>();
    BinMapping map;
    map.feature = static_cast<int>(ds.features.size());
    map.edges = jf.at("edges").get<std::vector<double>>();
    ds.features.push_back(std::move(spec));
    ds.bins.push_back(std::move(map));
  }
  ds.codes.resize(rows, cols);
  for (Index r = 0; r < rows; ++r)
    for (Index c = 0; c < cols; ++c) {
      std::int32_t v = 0;
      read_raw(in, &v, sizeof(v));
      ds.codes(r, c) = v;
    }
  ds.target.resize(rows);
  for (Index r = 0; r < rows; ++r) {
    std::int32_t v = 0;
    read_raw(in, &v, sizeof(v));
    ds.target[r] = v;
  }
  ds.split.resize(static_cast<std::size_t>(rows));
  read_raw(in, ds.split.data(), ds.split.size());
  return ds;
}

}  // namespace nsdt
