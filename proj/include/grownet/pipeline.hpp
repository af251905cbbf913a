#pragma once

#include "grownet/common.hpp"
#include "grownet/netstats.hpp"
#include "grownet/sgl.hpp"
#include "grownet/spectral.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace grownet {

struct ReconstructionPlan {
  std::vector<std::string> partition;  // per-firm sector label, panel order
  std::map<std::string, double> target_density_diag;
  // Keyed by (a, b) with a < b lexicographically.
  std::map<std::pair<std::string, std::string>, double> target_density_offdiag;
  int spectra_samples = 1000;
  SolverConfig solver;
  // Off-diagonal subproblems are twice the size and an order of magnitude
  // costlier per iteration; 0 means use solver.max_iter there too.
  int offdiag_max_iter = 0;
  uint64_t seed = 0;
};

// Averaged sorted Laplacian spectrum of n_samples ER(n, p) draws, smallest
// (zero) eigenvalue dropped, remaining clamped at 1e-9.
SpectralTarget spectral_target_er(int n, double p, int n_samples, uint64_t seed);

// Same with stochastic block model draws on the given sizes and densities.
SpectralTarget spectral_target_block(const std::vector<int>& sizes,
                                     const Eigen::MatrixXd& densities, int n_samples,
                                     uint64_t seed);

struct CalibrationResult {
  double alpha = 0.0;
  Network net;
  WeightVector w;
  double threshold = 1e-8;  // applied to w when extracting edges
  double density_achieved = 0.0;
  std::vector<std::pair<double, double>> probes;  // (alpha, density)
  bool quantile_fallback = false;
  bool converged = true;  // all probe solves converged
};

class CalibrationError : public Error {
 public:
  CalibrationError(const std::string& msg, std::vector<std::pair<double, double>> probes)
      : Error(msg), probes_(std::move(probes)) {}
  const std::vector<std::pair<double, double>>& probes() const { return probes_; }

 private:
  std::vector<std::pair<double, double>> probes_;
};

// Bisection on the L1 strength until the solved network's density is within
// +-10% relative of density_goal, at most 20 probe solves (warm-started).
// If the goal cannot be bracketed or the alpha-density relation turns
// non-monotone, falls back to quantile thresholding of the densest solve
// (flagged); throws CalibrationError when even that cannot reach the goal.
CalibrationResult calibrate_alpha(const Eigen::MatrixXd& s_hat,
                                  const SpectralTarget& target, double density_goal,
                                  const SolverConfig& cfg, uint64_t seed);

// Extended form used by the block pipeline: density is measured over
// density_indices (all pairs when absent), only free_indices move, w starts
// from w_init.
CalibrationResult calibrate_alpha_ext(const Eigen::MatrixXd& s_hat,
                                      const SpectralTarget& target,
                                      double density_goal, const SolverConfig& cfg,
                                      uint64_t seed,
                                      const std::optional<std::vector<int>>& free_indices,
                                      const std::optional<std::vector<int>>& density_indices,
                                      const std::optional<Eigen::VectorXd>& w_init);

struct BlockReport {
  std::string block_a;
  std::string block_b;  // equal to block_a for diagonal blocks
  double alpha = 0.0;
  double density_goal = 0.0;
  double density_achieved = 0.0;
  bool converged = true;
  bool quantile_fallback = false;
  double seconds = 0.0;  // not serialized; outputs must be re-run identical
};

struct ReconstructionReport {
  std::vector<BlockReport> diagonal;
  std::vector<BlockReport> offdiagonal;
};

struct ReconstructionResult {
  Network net;
  ReconstructionReport report;
};

class PartialResultError : public Error {
 public:
  PartialResultError(const std::string& msg, ReconstructionResult partial)
      : Error(msg), partial_(std::move(partial)) {}
  const ReconstructionResult& partial() const { return partial_; }

 private:
  ReconstructionResult partial_;
};

// Block procedure: solve every diagonal block with an ER spectral target,
// then every block pair with a two-block SBM target and the within-block
// weights frozen at their stage-1 values, then take the union.
ReconstructionResult reconstruct_network(const CorrMatrix& c_clean,
                                         const ReconstructionPlan& plan);

}  // namespace grownet
