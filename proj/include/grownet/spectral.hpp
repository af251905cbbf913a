#pragma once

#include "grownet/common.hpp"
#include "grownet/panel.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace grownet {

// Pairwise-complete correlation matrix at lag tau. Each entry is the Pearson
// correlation of the two series restricted to their co-observed window, so
// the diagonal is exactly 1 at tau = 0 and |entry| <= 1 always. Pairs whose
// co-observed window is shorter than min_overlap are 0 by convention; the
// overlap matrix records the window lengths.
struct CorrMatrix {
  int n = 0;
  int tau = 0;
  Eigen::MatrixXd entries;
  Eigen::MatrixXi overlap;
};

CorrMatrix corr_matrix(const GrowthPanel& g, int tau = 0, int min_overlap = 8);

// Serial reference kernel, kept for equivalence tests and benchmarks.
CorrMatrix corr_matrix_serial(const GrowthPanel& g, int tau = 0, int min_overlap = 8);

struct SpectrumReport {
  Eigen::VectorXd eigenvalues;   // ascending
  Eigen::MatrixXd eigenvectors;  // orthonormal columns aligned with eigenvalues
  double bulk_lo = 0.0;
  double bulk_hi = 0.0;
  std::vector<int> outlier_indices;  // eigenvalues outside [bulk_lo, bulk_hi]
  double aspect_ratio = 0.0;         // q = N/T
  std::string benchmark;             // "marchenko-pastur" or "surrogate"
  bool top_mode_in_bulk = false;     // removal statistically unjustified
};

// Full symmetric eigendecomposition with a Marchenko-Pastur benchmark at the
// given aspect ratio. Requires tau = 0. The relative Frobenius
// reconstruction error must be below 1e-8 or a NumericalError is thrown.
SpectrumReport eigendecompose(const CorrMatrix& c, double aspect_ratio);

// Bulk edges ((1 - sqrt(q))^2, (1 + sqrt(q))^2) of the Marchenko-Pastur law
// for unit-variance entries.
std::pair<double, double> mp_edges(double aspect_ratio);

// CDF of the Marchenko-Pastur law at x (absolutely continuous part plus the
// point mass at zero when q > 1).
double mp_cdf(double aspect_ratio, double x);

enum class SurrogateSource { Empirical, Gaussian };

// Noise benchmark spectra: observed entries are redrawn i.i.d. (pooled
// empirical distribution or standard normal) with the mask unchanged; each
// surrogate is re-rescaled, correlated and diagonalized. Returns n_sets
// ascending eigenvalue lists.
std::vector<Eigen::VectorXd> surrogate_spectrum(const GrowthPanel& g, int n_sets,
                                                uint64_t seed, SurrogateSource source,
                                                int min_overlap = 8);

// Noise bulk from surrogate spectra: the envelope of the per-set extreme
// eigenvalues widened by three standard deviations of their set-to-set
// fluctuation.
std::pair<double, double> surrogate_bulk(const std::vector<Eigen::VectorXd>& spectra);

// Projection of the panel onto the unit vector u. At each quarter the
// projection runs over the observed firms and is normalized by the squared
// norm of u restricted to them; quarters with no observed firm are missing.
Series extract_mode(const GrowthPanel& g, const Eigen::VectorXd& u);

// Removes the mode: y_i(t) = g_i(t) - u_i * vhat(t) on observed entries.
GrowthPanel remove_mode(const GrowthPanel& g, const Eigen::VectorXd& u);

struct CleanOptions {
  int modes_to_remove = 1;
  int min_overlap = 8;
  int n_surrogates = 0;  // 0: Marchenko-Pastur benchmark only
  SurrogateSource source = SurrogateSource::Empirical;
  uint64_t seed = 0;
};

struct CleanResult {
  GrowthPanel cleaned;
  std::vector<Series> modes;            // one per removed mode
  std::vector<SpectrumReport> reports;  // spectrum before each removal
  // Averaged surrogate eigenvalues of the first pass (empty without surrogates).
  Eigen::VectorXd surrogate_eigenvalues;
};

// The four-step cleaning: correlate, diagonalize, project out the top mode,
// re-rescale. Repeats modes_to_remove times. If the top eigenvalue sits
// inside the benchmark bulk the report's warning flag is set but the mode is
// removed anyway.
CleanResult clean_market_mode(const GrowthPanel& g, const CleanOptions& opts = {});

struct SectorCleanResult {
  GrowthPanel panel;
  Eigen::VectorXd loadings;          // khat_i = corr(g_i, sector sum)
  std::vector<int> unchanged_firms;  // singleton or degenerate sectors
};

// Removes per-sector trends: each firm's OLS projection on its sector-sum
// series is subtracted (khat, the reported loading, is the plain
// correlation). Firms in singleton sectors are returned unchanged.
SectorCleanResult sector_clean(const GrowthPanel& g,
                               const std::vector<std::string>& sector_labels);

// C(0) + [C(1) + C(-1)] / 2.
CorrMatrix sym_lag_corr(const GrowthPanel& g, int min_overlap = 8);

// Flips u so that its entry sum is nonnegative.
void orient_sign(Eigen::VectorXd& u);

}  // namespace grownet
