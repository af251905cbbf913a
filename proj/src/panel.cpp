#include "grownet/panel.hpp"

#include "grownet/csv.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <set>

namespace grownet {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

struct RawRecord {
  std::string firm;
  int quarter;
  double value;
  long line;
};

}  // namespace

long GrowthPanel::observed(Eigen::Index row) const {
  long c = 0;
  for (Eigen::Index t = 0; t < mask.cols(); ++t)
    if (mask(row, t)) ++c;
  return c;
}

SalesPanel load_sales_csv(const std::filesystem::path& path, int min_years) {
  const CsvTable table = read_csv(path);

  const auto& h = table.header;
  if (h.size() < 3 || h[0] != "firm_id" || h[1] != "quarter" || h[2] != "sales")
    throw DataError("expected header firm_id,quarter,sales[,sector][,country] in " +
                    path.string());
  const bool has_sector = h.size() >= 4 && h[3] == "sector";
  const bool has_country = h.size() >= 5 && h[4] == "country";

  std::vector<RawRecord> records;
  std::map<std::string, std::pair<std::string, std::string>> firm_labels;
  std::set<std::pair<std::string, int>> seen;
  long line_no = 1;
  for (const auto& row : table.rows) {
    ++line_no;
    RawRecord rec;
    rec.firm = row[0];
    rec.quarter = static_cast<int>(parse_int(row[1], line_no));
    rec.value = parse_double(row[2], line_no);
    rec.line = line_no;
    if (!(rec.value > 0.0))
      throw ParseError("nonpositive sales " + row[2] + " for firm " + rec.firm,
                       line_no);
    if (!seen.insert({rec.firm, rec.quarter}).second)
      throw ConflictError("duplicate (firm, quarter) = (" + rec.firm + ", " +
                          std::to_string(rec.quarter) + ")");
    auto& labels = firm_labels[rec.firm];
    if (has_sector && !row[3].empty()) labels.first = row[3];
    if (has_country && !row[4].empty()) labels.second = row[4];
    records.push_back(std::move(rec));
  }
  if (records.empty()) throw EmptyPanelError("no data rows in " + path.string());

  // Firm order follows first appearance in the file.
  std::vector<std::string> firms;
  std::map<std::string, int> firm_index;
  std::map<std::string, long> firm_obs;
  for (const auto& rec : records) {
    if (!firm_index.count(rec.firm)) {
      firm_index[rec.firm] = static_cast<int>(firms.size());
      firms.push_back(rec.firm);
    }
    ++firm_obs[rec.firm];
  }

  const long min_obs = 4L * min_years;
  std::vector<std::string> kept;
  std::map<std::string, int> kept_index;
  for (const auto& f : firms) {
    if (firm_obs[f] >= min_obs) {
      kept_index[f] = static_cast<int>(kept.size());
      kept.push_back(f);
    }
  }
  if (kept.empty())
    throw EmptyPanelError("no firm has at least " + std::to_string(min_obs) +
                          " observed quarters");

  int q_min = records.front().quarter;
  int q_max = q_min;
  for (const auto& rec : records) {
    if (!kept_index.count(rec.firm)) continue;
    q_min = std::min(q_min, rec.quarter);
    q_max = std::max(q_max, rec.quarter);
  }

  SalesPanel panel;
  panel.firm_ids = kept;
  panel.timestamps.resize(q_max - q_min + 1);
  for (int q = q_min; q <= q_max; ++q) panel.timestamps[q - q_min] = q;
  const auto n = static_cast<Eigen::Index>(kept.size());
  const auto t = static_cast<Eigen::Index>(panel.timestamps.size());
  panel.values = Eigen::MatrixXd::Constant(n, t, kNaN);
  panel.mask = BoolArray::Constant(n, t, false);
  for (const auto& rec : records) {
    auto it = kept_index.find(rec.firm);
    if (it == kept_index.end()) continue;
    panel.values(it->second, rec.quarter - q_min) = rec.value;
    panel.mask(it->second, rec.quarter - q_min) = true;
  }
  if (has_sector) {
    panel.sector.reserve(kept.size());
    for (const auto& f : kept) panel.sector.push_back(firm_labels[f].first);
  }
  if (has_country) {
    panel.country.reserve(kept.size());
    for (const auto& f : kept) panel.country.push_back(firm_labels[f].second);
  }
  return panel;
}

GrowthPanel growth_rates(const SalesPanel& sales, int horizon) {
  if (horizon < 1) throw DomainError("growth horizon must be >= 1");
  if (horizon >= sales.t())
    throw EmptyPanelError("horizon " + std::to_string(horizon) +
                          " leaves no growth columns (panel has " +
                          std::to_string(sales.t()) + " quarters)");

  GrowthPanel g;
  g.firm_ids = sales.firm_ids;
  g.timestamps.assign(sales.timestamps.begin(), sales.timestamps.end() - horizon);
  const Eigen::Index n = sales.n();
  const Eigen::Index t_out = sales.t() - horizon;
  g.values = Eigen::MatrixXd::Constant(n, t_out, kNaN);
  g.mask = BoolArray::Constant(n, t_out, false);
  g.rescaled = false;
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index t = 0; t < t_out; ++t) {
      if (sales.mask(i, t) && sales.mask(i, t + horizon)) {
        g.values(i, t) = std::log(sales.values(i, t + horizon) / sales.values(i, t));
        g.mask(i, t) = true;
      }
    }
  }
  return g;
}

GrowthPanel rescale_loo(const GrowthPanel& g) {
  GrowthPanel out = g;
  const Eigen::Index n = g.n();
  const Eigen::Index t = g.t();

  for (Eigen::Index i = 0; i < n; ++i) {
    const long cnt = g.observed(i);
    if (cnt < 3)
      throw InsufficientDataError("firm " + g.firm_ids[i] + " has " +
                                  std::to_string(cnt) +
                                  " observations, need >= 3 for rescaling");
  }

  // Exceptions must not cross the parallel region; degenerate rows are
  // recorded and reported afterwards.
  std::vector<Eigen::Index> degenerate_at(n, -1);

#pragma omp parallel for schedule(dynamic)
  for (Eigen::Index i = 0; i < n; ++i) {
    long cnt = 0;
    double sum = 0.0;
    for (Eigen::Index tt = 0; tt < t; ++tt) {
      if (!g.mask(i, tt)) continue;
      ++cnt;
      sum += g.values(i, tt);
    }
    const double mean = sum / static_cast<double>(cnt);

    // Work on centered values; the leave-one-out variance is translation
    // invariant and the centered moment differences are numerically stable.
    double csum = 0.0;
    double csumsq = 0.0;
    for (Eigen::Index tt = 0; tt < t; ++tt) {
      if (!g.mask(i, tt)) continue;
      const double y = g.values(i, tt) - mean;
      csum += y;
      csumsq += y * y;
    }

    bool bad = false;
    for (Eigen::Index tt = 0; tt < t && !bad; ++tt) {
      if (!g.mask(i, tt)) continue;
      const double y = g.values(i, tt) - mean;
      // Unbiased variance of the leave-one-out set (size cnt-1).
      const double loo_sum = csum - y;
      const double loo_sumsq = csumsq - y * y;
      const double loo_n = static_cast<double>(cnt - 1);
      const double var =
          (loo_sumsq - loo_sum * loo_sum / loo_n) / (loo_n - 1.0);
      if (!(var > 0.0)) {
        degenerate_at[i] = tt;
        bad = true;
        break;
      }
      out.values(i, tt) = y / std::sqrt(var);
    }
    if (bad) continue;

    // The leave-one-out denominator varies with t, so the rescaled row mean
    // is not exactly zero; a final exact re-centering restores it.
    double osum = 0.0;
    for (Eigen::Index tt = 0; tt < t; ++tt)
      if (g.mask(i, tt)) osum += out.values(i, tt);
    const double omean = osum / static_cast<double>(cnt);
    for (Eigen::Index tt = 0; tt < t; ++tt)
      if (g.mask(i, tt)) out.values(i, tt) -= omean;
  }

  for (Eigen::Index i = 0; i < n; ++i) {
    if (degenerate_at[i] >= 0)
      throw DegenerateSeriesError(
          "firm " + g.firm_ids[i] +
          " has zero leave-one-out variance at quarter " +
          std::to_string(g.timestamps[degenerate_at[i]]));
  }
  out.rescaled = true;
  return out;
}

void write_growth_csv(const GrowthPanel& g, const std::filesystem::path& path) {
  std::ofstream o(path);
  if (!o) throw DataError("cannot write file: " + path.string());
  o << "firm_id,quarter,value\n";
  for (Eigen::Index i = 0; i < g.n(); ++i)
    for (Eigen::Index t = 0; t < g.t(); ++t)
      if (g.mask(i, t))
        o << g.firm_ids[i] << ',' << g.timestamps[t] << ','
          << format_double(g.values(i, t)) << '\n';
}

GrowthPanel load_growth_csv(const std::filesystem::path& path, bool rescaled) {
  const CsvTable table = read_csv(path);
  const auto& h = table.header;
  if (h.size() != 3 || h[0] != "firm_id" || h[1] != "quarter" || h[2] != "value")
    throw DataError("expected header firm_id,quarter,value in " + path.string());
  if (table.rows.empty()) throw EmptyPanelError("no data rows in " + path.string());

  std::vector<std::string> firms;
  std::map<std::string, int> firm_index;
  int q_min = 0;
  int q_max = 0;
  bool first = true;
  long line_no = 1;
  for (const auto& row : table.rows) {
    ++line_no;
    if (!firm_index.count(row[0])) {
      firm_index[row[0]] = static_cast<int>(firms.size());
      firms.push_back(row[0]);
    }
    const int q = static_cast<int>(parse_int(row[1], line_no));
    if (first) {
      q_min = q_max = q;
      first = false;
    } else {
      q_min = std::min(q_min, q);
      q_max = std::max(q_max, q);
    }
  }

  GrowthPanel g;
  g.firm_ids = firms;
  g.timestamps.resize(q_max - q_min + 1);
  for (int q = q_min; q <= q_max; ++q) g.timestamps[q - q_min] = q;
  const auto n = static_cast<Eigen::Index>(firms.size());
  const auto t = static_cast<Eigen::Index>(g.timestamps.size());
  g.values = Eigen::MatrixXd::Constant(n, t, kNaN);
  g.mask = BoolArray::Constant(n, t, false);
  g.rescaled = rescaled;
  line_no = 1;
  std::set<std::pair<int, int>> seen;
  for (const auto& row : table.rows) {
    ++line_no;
    const int i = firm_index[row[0]];
    const int q = static_cast<int>(parse_int(row[1], line_no));
    if (!seen.insert({i, q}).second)
      throw ConflictError("duplicate (firm, quarter) = (" + row[0] + ", " +
                          std::to_string(q) + ")");
    g.values(i, q - q_min) = parse_double(row[2], line_no);
    g.mask(i, q - q_min) = true;
  }
  return g;
}

}  // namespace grownet
