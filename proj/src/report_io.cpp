#include "grownet/report_io.hpp"

#include "grownet/csv.hpp"

#include <json.hpp>

#include <algorithm>
#include <fstream>
#include <map>

namespace grownet {

namespace {

void dump_json(const nlohmann::json& j, const std::filesystem::path& path) {
  std::ofstream o(path);
  if (!o) throw DataError("cannot write file: " + path.string());
  o << j.dump(2) << '\n';
}

nlohmann::json metrics_json(const Metrics& m) {
  nlohmann::json j;
  j["tpr"] = m.tpr ? nlohmann::json(*m.tpr) : nlohmann::json();
  j["accuracy"] = m.accuracy ? nlohmann::json(*m.accuracy) : nlohmann::json();
  j["f1"] = m.f1 ? nlohmann::json(*m.f1) : nlohmann::json();
  return j;
}

nlohmann::json side_json(const BenchmarkSide& side) {
  nlohmann::json j;
  j["draws"] = side.draws;
  j["mean"] = side.mean;
  j["stdev"] = side.stdev;
  j["exceeded_by_2_std"] = side.exceeded;
  return j;
}

}  // namespace

void write_spectrum_report_json(const std::vector<SpectrumReport>& reports,
                                const Eigen::VectorXd& surrogate_eigenvalues,
                                const std::filesystem::path& path) {
  nlohmann::json j;
  j["passes"] = nlohmann::json::array();
  for (const auto& rep : reports) {
    nlohmann::json pass;
    pass["eigenvalues"] =
        std::vector<double>(rep.eigenvalues.begin(), rep.eigenvalues.end());
    pass["bulk_lo"] = rep.bulk_lo;
    pass["bulk_hi"] = rep.bulk_hi;
    pass["outlier_indices"] = rep.outlier_indices;
    pass["aspect_ratio"] = rep.aspect_ratio;
    pass["benchmark"] = rep.benchmark;
    pass["top_mode_in_bulk"] = rep.top_mode_in_bulk;
    j["passes"].push_back(std::move(pass));
  }
  if (surrogate_eigenvalues.size() > 0)
    j["surrogate_eigenvalues"] = std::vector<double>(
        surrogate_eigenvalues.begin(), surrogate_eigenvalues.end());
  dump_json(j, path);
}

void write_mode_csv(const Series& mode, const std::vector<int>& timestamps,
                    const std::filesystem::path& path) {
  std::ofstream o(path);
  if (!o) throw DataError("cannot write file: " + path.string());
  o << "quarter,value\n";
  for (Eigen::Index t = 0; t < mode.size(); ++t)
    if (mode.mask[t])
      o << timestamps[static_cast<std::size_t>(t)] << ','
        << format_double(mode.values[t]) << '\n';
}

void write_reconstruction_report_json(const ReconstructionReport& report,
                                      const std::filesystem::path& path) {
  nlohmann::json j;
  const auto block_json = [](const BlockReport& b) {
    nlohmann::json r;
    r["block_a"] = b.block_a;
    r["block_b"] = b.block_b;
    r["alpha"] = b.alpha;
    r["density_goal"] = b.density_goal;
    r["density_achieved"] = b.density_achieved;
    r["converged"] = b.converged;
    r["quantile_fallback"] = b.quantile_fallback;
    return r;
  };
  j["diagonal"] = nlohmann::json::array();
  for (const auto& b : report.diagonal) j["diagonal"].push_back(block_json(b));
  j["offdiagonal"] = nlohmann::json::array();
  for (const auto& b : report.offdiagonal) j["offdiagonal"].push_back(block_json(b));
  dump_json(j, path);
}

void write_comparison_json(const ComparisonReport& report,
                           const std::filesystem::path& path) {
  nlohmann::json j;
  j["predicted"] = metrics_json(report.predicted);
  j["er"] = side_json(report.er);
  j["sbm"] = side_json(report.sbm);
  dump_json(j, path);
}

void write_comparison_csv(const ComparisonReport& report,
                          const std::filesystem::path& path) {
  std::ofstream o(path);
  if (!o) throw DataError("cannot write file: " + path.string());
  o << "method,metric,value\n";
  const auto emit = [&o](const std::string& method, const std::string& metric,
                         double value) {
    o << method << ',' << metric << ',' << format_double(value) << '\n';
  };
  const std::pair<std::string, std::optional<double> Metrics::*> fields[] = {
      {"tpr", &Metrics::tpr},
      {"accuracy", &Metrics::accuracy},
      {"f1", &Metrics::f1},
  };
  for (const auto& [name, field] : fields)
    if (report.predicted.*field) emit("reconstructed", name, *(report.predicted.*field));
  for (const auto& [name, v] : report.er.mean) emit("er", name, v);
  for (const auto& [name, v] : report.sbm.mean) emit("sbm", name, v);
  o.flush();
}

void write_summary_json(const NetSummary& s, const std::filesystem::path& path) {
  nlohmann::json j;
  j["n"] = s.n;
  j["m"] = s.m;
  j["density_unordered"] = s.density_unordered;
  j["density_ordered"] = s.density_ordered;
  j["median_degree"] = s.median_degree;
  j["max_degree"] = s.max_degree;
  dump_json(j, path);
}

std::vector<std::string> load_partition_labels(const std::filesystem::path& path,
                                               const std::vector<std::string>& firm_ids) {
  const CsvTable table = read_csv(path);
  if (table.header.size() != 2 || table.header[0] != "firm_id" ||
      table.header[1] != "block")
    throw DataError("expected header firm_id,block in " + path.string());
  std::map<std::string, std::string> by_firm;
  for (const auto& row : table.rows) by_firm[row[0]] = row[1];
  std::vector<std::string> labels;
  labels.reserve(firm_ids.size());
  for (const auto& f : firm_ids) {
    auto it = by_firm.find(f);
    if (it == by_firm.end())
      throw DataError("partition file is missing firm '" + f + "'");
    labels.push_back(it->second);
  }
  return labels;
}

std::vector<int> labels_to_indices(const std::vector<std::string>& labels) {
  std::vector<std::string> seen;
  std::vector<int> out;
  out.reserve(labels.size());
  for (const auto& lbl : labels) {
    auto it = std::find(seen.begin(), seen.end(), lbl);
    if (it == seen.end()) {
      seen.push_back(lbl);
      out.push_back(static_cast<int>(seen.size()) - 1);
    } else {
      out.push_back(static_cast<int>(it - seen.begin()));
    }
  }
  return out;
}

}  // namespace grownet
