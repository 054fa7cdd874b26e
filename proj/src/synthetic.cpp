#include "nsdt/synthetic.hpp"

#include "nsdt/data.hpp"
#include "nsdt/mlp.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace nsdt {

namespace fs = std::filesystem;

namespace {

std::string fmt(double v, int precision = 6) {
  std::ostringstream out;
  out.precision(precision);
  out << v;
  return out.str();
}

struct RowSink {
  std::vector<std::string> lines;

  void add(const std::vector<std::string>& cells, const char* sep = ",") {
    std::string line;
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) line += sep;
      line += cells[i];
    }
    lines.push_back(std::move(line));
  }
};

void write_lines(const fs::path& path, const std::vector<std::string>& lines,
                 const std::string& header = "") {
  fs::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw NsdtError("cannot write " + path.string());
  if (!header.empty()) out << header << "\n";
  for (const std::string& line : lines) out << line << "\n";
}

// blank one feature cell in a handful of rows, duplicate a handful verbatim
void add_dirt(std::vector<std::vector<std::string>>& rows, const SynthConfig& cfg, Rng& rng,
              const std::vector<std::size_t>& feature_cells, const std::string& na) {
  const Index n = static_cast<Index>(rows.size());
  for (Index i = 0; i < cfg.missing && n > 0; ++i) {
    auto row = rows[static_cast<std::size_t>(rng.uniform_int(0, static_cast<int>(n) - 1))];
    row[feature_cells[static_cast<std::size_t>(
        rng.uniform_int(0, static_cast<int>(feature_cells.size()) - 1))]] = na;
    rows.push_back(std::move(row));
  }
  for (Index i = 0; i < cfg.duplicates && n > 0; ++i)
    rows.push_back(rows[static_cast<std::size_t>(rng.uniform_int(0, static_cast<int>(n) - 1))]);
}

// ---------------------------------------------------------------------------
// higgs: 28 standardized numerical features, near-balanced target
// ---------------------------------------------------------------------------

void write_higgs(const fs::path& dir, const SynthConfig& cfg) {
  Rng rng(cfg.seed);
  const int kLatents = 6;
  const int f_count = 28;
  std::vector<std::vector<std::string>> rows;
  for (Index r = 0; r < cfg.rows; ++r) {
    Vector u(kLatents);
    for (int k = 0; k < kLatents; ++k) u[k] = rng.normal();
    std::vector<std::string> cells;
    std::vector<double> x(f_count);
    for (int j = 0; j < f_count; ++j) {
      const int p = j % kLatents, q = (j + 3) % kLatents;
      x[j] = 0.85 * u[p] + 0.35 * u[q] + 0.5 * rng.normal();
      cells.push_back(fmt(x[j]));
    }
    const double z = 1.2 * u[0] + 0.9 * u[1] - 0.7 * u[2] + 0.5 * u[3] - 0.4 * u[4] +
                     0.3 * u[5] + 0.8 * u[0] * u[1] + 0.12;
    const double p_pos = stable_sigmoid(1.4 * z);
    cells.push_back(rng.uniform() < p_pos ? "1" : "0");
    rows.push_back(std::move(cells));
  }
  std::vector<std::size_t> feature_cells;
  for (std::size_t c = 0; c < static_cast<std::size_t>(f_count); ++c) feature_cells.push_back(c);
  add_dirt(rows, cfg, rng, feature_cells, "?");

  const DatasetSchema& schema = dataset_schema("higgs");
  std::string header;
  for (std::size_t c = 0; c < schema.columns.size(); ++c)
    header += (c ? "," : "") + schema.columns[c].name;
  RowSink sink;
  for (const auto& r : rows) sink.add(r);
  write_lines(dir / "higgs.csv", sink.lines, header);
}

// ---------------------------------------------------------------------------
// census: KDD column order, predefined train/test files, ~13:1 target
// ---------------------------------------------------------------------------

struct CatPool {
  std::vector<std::string> levels;
  std::vector<double> cum;  // cumulative sampling weights

  CatPool(std::vector<std::string> lv, std::vector<double> w) : levels(std::move(lv)) {
    double total = 0;
    for (double x : w) total += x;
    double acc = 0;
    for (double x : w) {
      acc += x / total;
      cum.push_back(acc);
    }
  }
  int sample(Rng& rng) const {
    const double u = rng.uniform();
    for (std::size_t i = 0; i < cum.size(); ++i)
      if (u <= cum[i]) return static_cast<int>(i);
    return static_cast<int>(cum.size()) - 1;
  }
};

void write_census(const fs::path& dir, const SynthConfig& cfg) {
  Rng rng(cfg.seed);
  const CatPool class_of_worker(
      {"Not_in_universe", "Private", "Self_employed_incorporated", "Federal_government",
       "Local_government", "Self_employed_not_incorporated"},
      {0.45, 0.35, 0.04, 0.05, 0.07, 0.04});
  const CatPool education({"Children", "7th_and_8th_grade", "High_school_graduate",
                           "Some_college_but_no_degree", "Bachelors_degree",
                           "Masters_degree", "Doctorate_degree"},
                          {0.18, 0.06, 0.3, 0.2, 0.16, 0.08, 0.02});
  const CatPool marital({"Never_married", "Married_civilian_spouse_present", "Divorced",
                         "Widowed"},
                        {0.4, 0.4, 0.12, 0.08});
  const CatPool occupation({"Not_in_universe", "Professional_specialty",
                            "Executive_admin_and_managerial", "Sales", "Handlers_and_cleaners",
                            "Machine_operators"},
                           {0.42, 0.16, 0.14, 0.12, 0.08, 0.08});
  const CatPool race({"White", "Black", "Asian_or_Pacific_Islander", "Other"},
                     {0.8, 0.12, 0.05, 0.03});
  const CatPool sex({"Female", "Male"}, {0.52, 0.48});
  const CatPool tax_filer({"Nonfiler", "Joint_both_under_65", "Single", "Head_of_household"},
                          {0.35, 0.3, 0.25, 0.1});
  const CatPool yes_no_u({"Not_in_universe", "Yes", "No"}, {0.7, 0.12, 0.18});
  const CatPool own_self({"0", "1", "2"}, {0.84, 0.1, 0.06});
  const CatPool generic({"A", "B", "C", "D"}, {0.4, 0.3, 0.2, 0.1});
  const CatPool country({"United-States", "Mexico", "Philippines", "Germany", "Other"},
                        {0.85, 0.06, 0.03, 0.02, 0.04});
  const CatPool year({"94", "95"}, {0.5, 0.5});

  const DatasetSchema& schema = dataset_schema("census");
  std::vector<std::vector<std::string>> rows;
  const Index total_rows = cfg.rows;
  for (Index r = 0; r < total_rows; ++r) {
    const double age = std::clamp(std::round(40.0 + 16.0 * rng.normal()), 0.0, 90.0);
    const int edu = education.sample(rng);
    const int occ = occupation.sample(rng);
    const int cow = class_of_worker.sample(rng);
    const int sx = sex.sample(rng);
    const int osf = own_self.sample(rng);
    const double weeks =
        cow == 0 ? (rng.uniform() < 0.7 ? 0.0 : std::round(rng.uniform(1, 52)))
                 : std::min(52.0, std::round(48.0 + 6.0 * rng.normal()));
    const double wage = cow == 0 || rng.uniform() < 0.8
                            ? 0.0
                            : std::round(rng.uniform(200, 4000));
    const double gains = rng.uniform() < 0.94 ? 0.0 : std::round(rng.uniform(100, 20000));
    const double losses = rng.uniform() < 0.97 ? 0.0 : std::round(rng.uniform(100, 4000));
    const double dividends = rng.uniform() < 0.9 ? 0.0 : std::round(rng.uniform(10, 9000));
    const double num_emp = std::round(rng.uniform(0, 6));

    const double z = -5.4 + 0.045 * (age - 40.0) * (age < 65 ? 1.0 : 0.3) + 0.75 * edu +
                     0.4 * (occ == 1 || occ == 2 ? 1.0 : 0.0) + 0.035 * (weeks - 26.0) +
                     0.9 * (gains > 3000 ? 1.0 : 0.0) + 0.6 * (dividends > 2000 ? 1.0 : 0.0) +
                     0.5 * (osf == 1 ? 1.0 : 0.0) + 0.25 * (sx == 1 ? 1.0 : 0.0) +
                     0.5 * rng.normal();
    const bool positive = rng.uniform() < stable_sigmoid(1.6 * z);

    std::vector<std::string> cells;
    for (const ColumnDef& def : schema.columns) {
      if (def.name == "age") cells.push_back(fmt(age));
      else if (def.name == "class_of_worker") cells.push_back(class_of_worker.levels[cow]);
      else if (def.name == "det_industry_recode") cells.push_back(std::to_string(rng.uniform_int(0, 9)));
      else if (def.name == "det_occupation_recode") cells.push_back(std::to_string(rng.uniform_int(0, 9)));
      else if (def.name == "education") cells.push_back(education.levels[edu]);
      else if (def.name == "wage_per_hour") cells.push_back(fmt(wage));
      else if (def.name == "marital_stat") cells.push_back(marital.levels[marital.sample(rng)]);
      else if (def.name == "major_occupation_code") cells.push_back(occupation.levels[occ]);
      else if (def.name == "race") cells.push_back(race.levels[race.sample(rng)]);
      else if (def.name == "sex") cells.push_back(sex.levels[sx]);
      else if (def.name == "capital_gains") cells.push_back(fmt(gains));
      else if (def.name == "capital_losses") cells.push_back(fmt(losses));
      else if (def.name == "dividends_from_stocks") cells.push_back(fmt(dividends));
      else if (def.name == "tax_filer_stat") cells.push_back(tax_filer.levels[tax_filer.sample(rng)]);
      else if (def.name == "instance_weight") cells.push_back(fmt(rng.uniform(100, 5000), 2));
      else if (def.name == "num_persons_worked_for_employer") cells.push_back(fmt(num_emp));
      else if (def.name == "country_of_birth_father" || def.name == "country_of_birth_mother" ||
               def.name == "country_of_birth_self")
        cells.push_back(country.levels[country.sample(rng)]);
      else if (def.name == "citizenship")
        cells.push_back(rng.uniform() < 0.9 ? "Native" : "Foreign_born_naturalized");
      else if (def.name == "own_business_or_self_employed") cells.push_back(own_self.levels[osf]);
      else if (def.name == "veterans_benefits") cells.push_back(std::to_string(rng.uniform_int(0, 2)));
      else if (def.name == "weeks_worked_in_year") cells.push_back(fmt(weeks));
      else if (def.name == "year") cells.push_back(year.levels[year.sample(rng)]);
      else if (def.role == ColumnDef::kTarget) cells.push_back(positive ? "50000+." : "- 50000.");
      else if (def.role == ColumnDef::kCat)
        cells.push_back(def.name.substr(0, 3) + "_" + generic.levels[generic.sample(rng)]);
      else cells.push_back(fmt(std::round(rng.uniform(0, 5))));
    }
    rows.push_back(std::move(cells));
  }

  std::vector<std::size_t> feature_cells;
  for (std::size_t c = 0; c < schema.columns.size(); ++c)
    if (schema.columns[c].role == ColumnDef::kNum || schema.columns[c].role == ColumnDef::kCat)
      feature_cells.push_back(c);
  add_dirt(rows, cfg, rng, feature_cells, "?");
  // conflicting pairs: identical features, both labels
  const std::size_t target_cell = schema.columns.size() - 1;
  for (Index i = 0; i < cfg.conflicts && !rows.empty(); ++i) {
    auto row = rows[static_cast<std::size_t>(rng.uniform_int(0, static_cast<int>(cfg.rows) - 1))];
    row[target_cell] = row[target_cell] == "50000+." ? "- 50000." : "50000+.";
    rows.push_back(std::move(row));
  }

  // predefined split: last quarter of the generated rows goes to the test file
  const std::size_t test_start = rows.size() - rows.size() / 4;
  RowSink train_sink, test_sink;
  for (std::size_t r = 0; r < rows.size(); ++r)
    (r < test_start ? train_sink : test_sink).add(rows[r], ", ");
  write_lines(dir / "census-income.data", train_sink.lines);
  write_lines(dir / "census-income.test", test_sink.lines);
}

// ---------------------------------------------------------------------------
// credit: 10 skewed numerical features with NA cells, ~13.4:1 target
// ---------------------------------------------------------------------------

void write_credit(const fs::path& dir, const SynthConfig& cfg) {
  Rng rng(cfg.seed);
  std::vector<std::vector<std::string>> rows;
  for (Index r = 0; r < cfg.rows; ++r) {
    const double util = std::min(1.5, std::abs(0.3 + 0.35 * rng.normal()));
    const double age = std::clamp(std::round(48.0 + 15.0 * rng.normal()), 21.0, 95.0);
    const bool sentinel = rng.uniform() < 0.004;
    const double late30 = sentinel ? 98.0 : std::floor(std::max(0.0, 1.2 * rng.normal() + 0.18));
    const double debt_ratio = std::abs(0.35 + 0.5 * rng.normal());
    const bool income_na = rng.uniform() < 0.02;
    const double income = std::round(3500.0 * std::exp(0.5 * rng.normal()));
    const double open_lines = std::round(std::max(0.0, 8.0 + 4.0 * rng.normal()));
    const double late90 = sentinel ? 98.0 : std::floor(std::max(0.0, 0.8 * rng.normal() - 0.1));
    const double real_estate = std::round(std::max(0.0, 1.0 + 1.1 * rng.normal()));
    const double late60 = sentinel ? 98.0 : std::floor(std::max(0.0, 0.7 * rng.normal() - 0.2));
    const bool deps_na = rng.uniform() < 0.02;
    const double dependents = std::round(std::max(0.0, 0.8 + 1.1 * rng.normal()));

    const double z = -4.4 + 2.6 * util + 0.9 * std::min(late30, 5.0) +
                     1.4 * std::min(late90, 5.0) + 1.0 * std::min(late60, 5.0) +
                     0.6 * std::min(debt_ratio, 2.0) - 0.03 * (age - 48.0) +
                     0.6 * rng.normal();
    const bool positive = rng.uniform() < stable_sigmoid(1.3 * z);

    std::vector<std::string> cells;
    cells.push_back(std::to_string(r + 1));
    cells.push_back(positive ? "1" : "0");
    cells.push_back(fmt(util));
    cells.push_back(fmt(age));
    cells.push_back(fmt(late30));
    cells.push_back(fmt(debt_ratio));
    cells.push_back(income_na ? "NA" : fmt(income));
    cells.push_back(fmt(open_lines));
    cells.push_back(fmt(late90));
    cells.push_back(fmt(real_estate));
    cells.push_back(fmt(late60));
    cells.push_back(deps_na ? "NA" : fmt(dependents));
    rows.push_back(std::move(cells));
  }
  Rng dirt_rng(cfg.seed ^ 0x5bd1e995u);
  std::vector<std::size_t> feature_cells;
  for (std::size_t c = 2; c < 12; ++c) feature_cells.push_back(c);
  add_dirt(rows, cfg, dirt_rng, feature_cells, "NA");

  const DatasetSchema& schema = dataset_schema("credit");
  std::string header;
  for (std::size_t c = 0; c < schema.columns.size(); ++c)
    header += (c ? "," : "") + (schema.columns[c].name == "row_id" ? "" : schema.columns[c].name);
  RowSink sink;
  for (const auto& r : rows) sink.add(r);
  write_lines(dir / "cs-training.csv", sink.lines, header);
}

// ---------------------------------------------------------------------------
// insurance: 116 categorical + 14 continuous features, continuous loss target
// ---------------------------------------------------------------------------

void write_insurance(const fs::path& dir, const SynthConfig& cfg) {
  Rng rng(cfg.seed);
  std::vector<std::vector<std::string>> rows;
  const char* letters[] = {"A", "B", "C", "D"};
  for (Index r = 0; r < cfg.rows; ++r) {
    std::vector<std::string> cells;
    cells.push_back(std::to_string(r + 1));
    double effect = 0;
    for (int c = 1; c <= 116; ++c) {
      const int pool = c <= 72 ? 2 : (c <= 100 ? 3 : 4);
      const int level = rng.uniform_int(0, pool - 1);
      if (c <= 12) effect += 0.22 * level;  // informative block
      cells.push_back(letters[level]);
    }
    std::vector<double> cont(14);
    for (int c = 0; c < 14; ++c) {
      cont[c] = std::clamp(0.5 + 0.22 * rng.normal(), 0.0, 1.0);
      cells.push_back(fmt(cont[c]));
    }
    effect += 1.6 * cont[0] + 1.1 * cont[1] - 0.9 * cont[2] + 0.7 * cont[3] * cont[4];
    const double loss = std::round(100.0 * std::exp(5.9 + 0.55 * effect + 0.7 * rng.normal())) / 100.0;
    cells.push_back(fmt(loss, 8));
    rows.push_back(std::move(cells));
  }
  Rng dirt_rng(cfg.seed ^ 0x27d4eb2fu);
  std::vector<std::size_t> feature_cells;
  for (std::size_t c = 1; c <= 130; ++c) feature_cells.push_back(c);
  add_dirt(rows, cfg, dirt_rng, feature_cells, "NA");

  const DatasetSchema& schema = dataset_schema("insurance");
  std::string header;
  for (std::size_t c = 0; c < schema.columns.size(); ++c)
    header += (c ? "," : "") + schema.columns[c].name;
  RowSink sink;
  for (const auto& r : rows) sink.add(r);
  write_lines(dir / "train.csv", sink.lines, header);
}

}  // namespace

void write_synthetic_dataset(const std::string& dataset_id, const std::string& data_dir,
                             const SynthConfig& config) {
  const fs::path dir = fs::path(data_dir) / dataset_id;
  if (dataset_id == "higgs") return write_higgs(dir, config);
  if (dataset_id == "census") return write_census(dir, config);
  if (dataset_id == "credit") return write_credit(dir, config);
  if (dataset_id == "insurance") return write_insurance(dir, config);
  throw NsdtError("unknown dataset_id: " + dataset_id);
}

}  // namespace nsdt
