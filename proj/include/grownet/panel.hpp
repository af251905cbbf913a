#pragma once

#include "grownet/common.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace grownet {

// Quarterly sales panel on a contiguous quarter grid. values is NaN where
// mask is false; observed values are strictly positive (logs are taken
// downstream).
struct SalesPanel {
  std::vector<std::string> firm_ids;
  std::vector<int> timestamps;  // contiguous quarter indices, ascending
  Eigen::MatrixXd values;       // n x t
  BoolArray mask;
  std::vector<std::string> sector;   // empty if the CSV had no sector column
  std::vector<std::string> country;  // empty if the CSV had no country column

  Eigen::Index n() const { return values.rows(); }
  Eigen::Index t() const { return values.cols(); }
};

// Panel of (optionally leave-one-out rescaled) log growth rates.
struct GrowthPanel {
  std::vector<std::string> firm_ids;
  std::vector<int> timestamps;
  Eigen::MatrixXd values;  // NaN where mask is false
  BoolArray mask;
  bool rescaled = false;

  Eigen::Index n() const { return values.rows(); }
  Eigen::Index t() const { return values.cols(); }
  long observed(Eigen::Index row) const;
};

// Loads `firm_id,quarter,sales[,sector][,country]`. Firms with fewer than
// 4*min_years observed quarters are dropped; duplicate (firm, quarter) rows
// and nonpositive sales are errors; zero surviving firms is an error.
SalesPanel load_sales_csv(const std::filesystem::path& path, int min_years);

// Annual log growth over `horizon` quarters: value at column t is
// log(s(t+horizon)/s(t)) where both observations exist. Output keeps the
// first t-horizon quarter labels.
GrowthPanel growth_rates(const SalesPanel& sales, int horizon = 4);

// Leave-one-out rescaling. Each observed entry is centered by the row mean
// over all observed quarters and divided by the unbiased sample standard
// deviation of the remaining observations (the one at t excluded). Rows are
// then re-centered so the observed-entry mean is exactly zero. Requires at
// least 3 observations per row.
GrowthPanel rescale_loo(const GrowthPanel& g);

// CSV `firm_id,quarter,value`, missing entries omitted.
void write_growth_csv(const GrowthPanel& g, const std::filesystem::path& path);
GrowthPanel load_growth_csv(const std::filesystem::path& path, bool rescaled);

}  // namespace grownet
