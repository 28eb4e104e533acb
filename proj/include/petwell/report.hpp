#pragma once

// Subgroup comparisons over user profiles and the report emitters: the
// gender x race table, pet/partner/child distributions, pairwise comparison
// tables and per-group chart data.

#include <array>
#include <cstdio>
#include <functional>
#include <optional>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "petwell/inference.hpp"
#include "petwell/stats.hpp"

namespace petwell {

enum class Metric { visual, textual };

inline const char* to_string(Metric m) { return m == Metric::visual ? "H_t" : "C_t"; }

inline std::optional<Metric> parse_metric(std::string_view s) {
  if (s == "H_t" || s == "visual") return Metric::visual;
  if (s == "C_t" || s == "textual") return Metric::textual;
  return std::nullopt;
}

inline double metric_value(const UserProfile& p, Metric m) {
  return m == Metric::visual ? p.visual_happiness : p.textual_happiness;
}

enum class Stratum { all, pet_owners, non_owners };

inline const char* to_string(Stratum s) {
  switch (s) {
    case Stratum::all: return "all";
    case Stratum::pet_owners: return "pet_owners";
    case Stratum::non_owners: return "non_owners";
  }
  return "?";
}

inline std::optional<Stratum> parse_stratum(std::string_view s) {
  if (s == "all") return Stratum::all;
  if (s == "pet_owners" || s == "pet") return Stratum::pet_owners;
  if (s == "non_owners" || s == "none") return Stratum::non_owners;
  return std::nullopt;
}

inline bool in_stratum(const UserProfile& p, Stratum s) {
  switch (s) {
    case Stratum::all: return true;
    case Stratum::pet_owners: return p.ownership != OwnershipLabel::none;
    case Stratum::non_owners: return p.ownership == OwnershipLabel::none;
  }
  return false;
}

/// A partition of users into ordered levels. Pair labels follow level order.
struct Factor {
  std::string name;
  std::vector<std::string> levels;
  std::function<std::optional<std::size_t>(const UserProfile&)> level_of;
};

inline Factor pet_factor() {
  return {"pet", {"dog", "cat", "none"}, [](const UserProfile& p) -> std::optional<std::size_t> {
            return p.ownership == OwnershipLabel::dog_owner ? 0 : p.ownership == OwnershipLabel::cat_owner ? 1 : 2;
          }};
}

inline Factor pet_combined_factor() {
  return {"pet_combined", {"pet", "none"}, [](const UserProfile& p) -> std::optional<std::size_t> {
            return p.ownership == OwnershipLabel::none ? 1 : 0;
          }};
}

inline Factor gender_factor() {
  return {"gender", {"female", "male"}, [](const UserProfile& p) -> std::optional<std::size_t> {
            return p.demographics.gender == Gender::female ? 0 : 1;
          }};
}

inline Factor race_factor() {
  return {"race", {"asian", "african_american", "caucasian"},
          [](const UserProfile& p) -> std::optional<std::size_t> {
            return static_cast<std::size_t>(p.demographics.race);
          }};
}

inline Factor partner_factor() {
  return {"partner", {"partner", "no_partner"}, [](const UserProfile& p) -> std::optional<std::size_t> {
            return p.has_partner ? 0 : 1;
          }};
}

inline Factor child_factor() {
  return {"child", {"child", "no_child"}, [](const UserProfile& p) -> std::optional<std::size_t> {
            return p.has_child ? 0 : 1;
          }};
}

inline Factor factor_by_name(std::string_view name) {
  for (auto make : {pet_factor, pet_combined_factor, gender_factor, race_factor, partner_factor, child_factor}) {
    auto f = make();
    if (f.name == name) return f;
  }
  throw std::invalid_argument("unknown factor: " + std::string(name));
}

/// Metric values per level, restricted to the stratum.
inline std::vector<stats::GroupSample> partition(std::span<const UserProfile> profiles, const Factor& factor,
                                                 Metric metric, Stratum stratum) {
  std::vector<stats::GroupSample> cells;
  for (const auto& l : factor.levels) cells.push_back({l, {}});
  for (const auto& p : profiles) {
    if (!in_stratum(p, stratum)) continue;
    if (auto lvl = factor.level_of(p); lvl && *lvl < cells.size()) cells[*lvl].values.push_back(metric_value(p, metric));
  }
  return cells;
}

struct ComparisonRow {
  std::string categories;
  std::optional<stats::ComparisonResult> result;  // empty for a skipped pair
  std::string warning;
};

struct ComparisonTable {
  std::string factor;
  Stratum stratum = Stratum::all;
  Metric metric = Metric::visual;
  double alpha = 0.05;
  std::vector<ComparisonRow> rows;
  std::vector<std::string> warnings;
};

/// Tukey-Kramer over the factor's levels. Levels with fewer than
/// `min_cell` users are left out of the test and their pairs reported as
/// warning rows.
inline ComparisonTable compare_subgroups(std::span<const UserProfile> profiles, const Factor& factor, Metric metric,
                                         Stratum stratum = Stratum::all, double alpha = 0.05,
                                         std::size_t min_cell = 2) {
  ComparisonTable table{factor.name, stratum, metric, alpha, {}, {}};
  if (factor.levels.size() < 2) {
    table.warnings.push_back("factor '" + factor.name + "' has fewer than two levels; nothing to compare");
    return table;
  }
  const auto cells = partition(profiles, factor, metric, stratum);
  std::vector<bool> usable(cells.size());
  std::vector<stats::GroupSample> tested;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    usable[i] = cells[i].values.size() >= std::max<std::size_t>(min_cell, 2);
    if (usable[i]) tested.push_back(cells[i]);
    else
      table.warnings.push_back("level '" + cells[i].label + "' has " + std::to_string(cells[i].values.size()) +
                               " users (< " + std::to_string(std::max<std::size_t>(min_cell, 2)) + ")");
  }
  std::vector<stats::ComparisonResult> results;
  if (tested.size() >= 2) results = stats::tukey_kramer(tested, alpha);

  std::size_t next = 0;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    for (std::size_t j = i + 1; j < cells.size(); ++j) {
      ComparisonRow row{cells[i].label + "-" + cells[j].label, std::nullopt, {}};
      if (usable[i] && usable[j]) {
        row.result = results[next++];
      } else {
        row.warning = "skipped: undersized cell";
      }
      table.rows.push_back(std::move(row));
    }
  }
  return table;
}

inline std::string format_fixed4(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.4f", v);
  std::string s = buf;
  if (s == "-0.0000") s = "0.0000";
  return s;
}

/// p-values below 1e-4 print as 0.
inline std::string format_p(double p) { return p < 1e-4 ? std::string("0") : format_fixed4(p); }

inline void write_comparison_tsv(std::ostream& out, const ComparisonTable& t) {
  out << "# factor=" << t.factor << " stratum=" << to_string(t.stratum) << " metric=" << to_string(t.metric)
      << " alpha=" << t.alpha << '\n';
  for (const auto& w : t.warnings) out << "# warning: " << w << '\n';
  out << "categories\tlower\test_mean_diff\tupper\tp_val\n";
  for (const auto& r : t.rows) {
    if (r.result) {
      out << r.categories << '\t' << format_fixed4(r.result->lower) << '\t' << format_fixed4(r.result->estimate)
          << '\t' << format_fixed4(r.result->upper) << '\t' << format_p(r.result->p_value) << '\n';
    } else {
      out << r.categories << "\tNA\tNA\tNA\tNA\n";
    }
  }
}

inline nlohmann::json comparison_json(const ComparisonTable& t) {
  auto rows = nlohmann::json::array();
  for (const auto& r : t.rows) {
    nlohmann::json j{{"categories", r.categories}};
    if (r.result) {
      j["lower"] = r.result->lower;
      j["est_mean_diff"] = r.result->estimate;
      j["upper"] = r.result->upper;
      j["p_val"] = r.result->p_value;
      j["degenerate"] = r.result->degenerate;
    } else {
      j["warning"] = r.warning;
    }
    rows.push_back(std::move(j));
  }
  return {{"factor", t.factor}, {"stratum", to_string(t.stratum)}, {"metric", to_string(t.metric)},
          {"alpha", t.alpha},   {"rows", std::move(rows)},          {"warnings", t.warnings}};
}

/// The comparisons emitted for a run: pet type and pet-vs-none over all
/// users, then gender, race, partner and child within owners and non-owners.
inline std::vector<ComparisonTable> standard_comparisons(std::span<const UserProfile> profiles, double alpha) {
  std::vector<ComparisonTable> out;
  for (Metric m : {Metric::visual, Metric::textual}) {
    out.push_back(compare_subgroups(profiles, pet_factor(), m, Stratum::all, alpha));
    out.push_back(compare_subgroups(profiles, pet_combined_factor(), m, Stratum::all, alpha));
    for (auto make : {gender_factor, race_factor, partner_factor, child_factor})
      for (Stratum s : {Stratum::pet_owners, Stratum::non_owners})
        out.push_back(compare_subgroups(profiles, make(), m, s, alpha));
  }
  return out;
}

struct ChartRow {
  std::string label;
  double mean = 0.0;
  std::size_t count = 0;
  double sd = 0.0;
};

struct ChartSeries {
  std::string factor;
  Stratum stratum = Stratum::all;
  Metric metric = Metric::visual;
  std::vector<ChartRow> rows;
  std::vector<std::string> warnings;
};

/// One row per non-empty level; means use the same routine as the comparison tables.
inline ChartSeries emit_chart_data(std::span<const UserProfile> profiles, const Factor& factor, Metric metric,
                                   Stratum stratum = Stratum::all) {
  if (profiles.empty()) throw std::invalid_argument("chart data needs at least one profile");
  ChartSeries series{factor.name, stratum, metric, {}, {}};
  for (const auto& cell : partition(profiles, factor, metric, stratum)) {
    if (cell.values.empty()) {
      series.warnings.push_back("level '" + cell.label + "' is empty");
      continue;
    }
    series.rows.push_back({cell.label, stats::group_mean(cell.values), cell.values.size(), stats::group_sd(cell.values)});
  }
  return series;
}

inline void write_chart_tsv_header(std::ostream& out) {
  out << "factor\tstratum\tmetric\tgroup\tmean\tcount\tstd\n";
}

inline void write_chart_tsv(std::ostream& out, const ChartSeries& s) {
  for (const auto& r : s.rows) {
    char mean[64], sd[64];
    std::snprintf(mean, sizeof mean, "%.6f", r.mean);
    std::snprintf(sd, sizeof sd, "%.6f", r.sd);
    out << s.factor << '\t' << to_string(s.stratum) << '\t' << to_string(s.metric) << '\t' << r.label << '\t'
        << mean << '\t' << r.count << '\t' << sd << '\n';
  }
}

inline std::vector<ChartSeries> standard_chart_data(std::span<const UserProfile> profiles) {
  std::vector<ChartSeries> out;
  if (profiles.empty()) return out;
  for (Metric m : {Metric::visual, Metric::textual}) {
    out.push_back(emit_chart_data(profiles, pet_factor(), m));
    out.push_back(emit_chart_data(profiles, pet_combined_factor(), m));
    for (auto make : {gender_factor, race_factor, partner_factor, child_factor})
      for (Stratum s : {Stratum::pet_owners, Stratum::non_owners})
        out.push_back(emit_chart_data(profiles, make(), m, s));
  }
  return out;
}

/// Gender x race counts with marginals.
struct DemographicTable {
  std::array<std::array<std::size_t, 3>, 2> counts{};  // [male, female][asian, african_american, caucasian]

  std::size_t row_sum(std::size_t r) const { return counts[r][0] + counts[r][1] + counts[r][2]; }
  std::size_t col_sum(std::size_t c) const { return counts[0][c] + counts[1][c]; }
  std::size_t total() const { return row_sum(0) + row_sum(1); }
};

inline DemographicTable demographic_table(std::span<const UserProfile> profiles) {
  DemographicTable t;
  for (const auto& p : profiles) {
    const std::size_t r = p.demographics.gender == Gender::male ? 0 : 1;
    ++t.counts[r][static_cast<std::size_t>(p.demographics.race)];
  }
  return t;
}

inline void write_demographic_tsv(std::ostream& out, const DemographicTable& t) {
  out << "\tAsian\tAfrican American\tCaucasian\tSum\n";
  const char* names[2] = {"Male", "Female"};
  for (std::size_t r = 0; r < 2; ++r)
    out << names[r] << '\t' << t.counts[r][0] << '\t' << t.counts[r][1] << '\t' << t.counts[r][2] << '\t'
        << t.row_sum(r) << '\n';
  out << "Sum\t" << t.col_sum(0) << '\t' << t.col_sum(1) << '\t' << t.col_sum(2) << '\t' << t.total() << '\n';
}

inline nlohmann::json demographic_json(const DemographicTable& t) {
  nlohmann::json rows = nlohmann::json::object();
  const char* genders[2] = {"male", "female"};
  for (std::size_t r = 0; r < 2; ++r)
    rows[genders[r]] = {{"asian", t.counts[r][0]}, {"african_american", t.counts[r][1]},
                        {"caucasian", t.counts[r][2]}, {"sum", t.row_sum(r)}};
  rows["sum"] = {{"asian", t.col_sum(0)}, {"african_american", t.col_sum(1)}, {"caucasian", t.col_sum(2)},
                 {"sum", t.total()}};
  return rows;
}

/// Pet / partner / child counts.
struct Distributions {
  std::size_t dog = 0, cat = 0, none = 0;
  std::size_t partner = 0, no_partner = 0;
  std::size_t child = 0, no_child = 0;
};

inline Distributions distributions(std::span<const UserProfile> profiles) {
  Distributions d;
  for (const auto& p : profiles) {
    (p.ownership == OwnershipLabel::dog_owner ? d.dog : p.ownership == OwnershipLabel::cat_owner ? d.cat : d.none)++;
    (p.has_partner ? d.partner : d.no_partner)++;
    (p.has_child ? d.child : d.no_child)++;
  }
  return d;
}

inline void write_distributions_tsv(std::ostream& out, const Distributions& d) {
  out << "category\tlevel\tcount\n"
      << "pet\tdog\t" << d.dog << "\npet\tcat\t" << d.cat << "\npet\tnone\t" << d.none << '\n'
      << "partner\tyes\t" << d.partner << "\npartner\tno\t" << d.no_partner << '\n'
      << "child\tyes\t" << d.child << "\nchild\tno\t" << d.no_child << '\n';
}

inline nlohmann::json distributions_json(const Distributions& d) {
  return {{"pet", {{"dog", d.dog}, {"cat", d.cat}, {"none", d.none}}},
          {"partner", {{"yes", d.partner}, {"no", d.no_partner}}},
          {"child", {{"yes", d.child}, {"no", d.no_child}}}};
}

}  // namespace petwell
