#pragma once

#include "grownet/evalx.hpp"
#include "grownet/netstats.hpp"
#include "grownet/pipeline.hpp"
#include "grownet/spectral.hpp"

#include <filesystem>

namespace grownet {

// Spectrum report (plus optional averaged surrogate eigenvalues) as JSON.
void write_spectrum_report_json(const std::vector<SpectrumReport>& reports,
                                const Eigen::VectorXd& surrogate_eigenvalues,
                                const std::filesystem::path& path);

void write_mode_csv(const Series& mode, const std::vector<int>& timestamps,
                    const std::filesystem::path& path);

// Per-block reconstruction report. Wall times are deliberately left out so
// identical runs produce identical bytes.
void write_reconstruction_report_json(const ReconstructionReport& report,
                                      const std::filesystem::path& path);

void write_comparison_json(const ComparisonReport& report,
                           const std::filesystem::path& path);
// One `method,metric,value` row per defined entry.
void write_comparison_csv(const ComparisonReport& report,
                          const std::filesystem::path& path);

void write_summary_json(const NetSummary& s, const std::filesystem::path& path);

// `firm_id,block` partition file. Block indices follow first appearance.
std::vector<std::string> load_partition_labels(const std::filesystem::path& path,
                                               const std::vector<std::string>& firm_ids);
std::vector<int> labels_to_indices(const std::vector<std::string>& labels);

}  // namespace grownet
