#pragma once

#include "grownet/common.hpp"
#include "grownet/netstats.hpp"

#include <cstdint>
#include <optional>
#include <vector>

namespace grownet {

// Nonnegative edge-weight vector parameterizing a p-node graph Laplacian.
// Weights are stored in column-major order of the strict lower triangle:
// (1,0), (2,0), ..., (p-1,0), (2,1), (3,1), ...
struct WeightVector {
  int p = 0;
  Eigen::VectorXd w;  // length p(p-1)/2
};

// Target nonzero Laplacian spectrum: q = p-1 positive values, ascending.
struct SpectralTarget {
  Eigen::VectorXd lambdas;
};

struct SolverConfig {
  double alpha = 0.0;   // L1 strength
  double beta = 100.0;  // spectral penalty strength
  int max_iter = 5000;
  double tol = 1e-6;  // convergence threshold on max|w_next - w|
  // Weight positions allowed to move. Absent: all. Empty: none.
  std::optional<std::vector<int>> free_indices;
};

// Flat index of the weight joining nodes i and j, 0 <= j < i < p.
int pair_index(int i, int j, int p);

// w -> Laplacian: off-diagonal (i,j) is -w[pair_index], rows sum to zero.
Eigen::MatrixXd lap_op(const WeightVector& w);

// Adjoint of lap_op under the Frobenius inner product: component (i,j) is
// y_ii - y_ij - y_ji + y_jj. Y must be symmetric.
Eigen::VectorXd lap_adjoint(const Eigen::MatrixXd& y);

// Gradient of f(w) = 0.5*||Lw||_F^2 - c'w, namely L*(Lw) - c.
Eigen::VectorXd grad_f(const WeightVector& w, const Eigen::VectorXd& c);

// K = S + alpha*(2I - J) with J all ones; for w >= 0,
// tr(Lw S) + alpha*||Lw||_1 = tr(Lw K).
Eigen::MatrixXd build_K(const Eigen::MatrixXd& s_hat, double alpha);

// The solver's data-driven starting point: weight on pairs whose linear
// smoothness cost (L*K)_k is below average, support capped at twice the
// edge count the target trace implies, total scaled so tr(Lw0) matches the
// target spectrum.
Eigen::VectorXd default_w_init(const Eigen::MatrixXd& K,
                               const SpectralTarget& target);

struct IterRecord {
  int iter = 0;
  double objective = 0.0;
  double max_delta_w = 0.0;
};

struct SolveResult {
  WeightVector w;
  Eigen::MatrixXd U;  // p x (p-1) eigenvectors aligned ascending with lambdas
  std::vector<IterRecord> trace;
  bool converged = false;
  // Objective increased beyond slack on some cycle; expected to stay false,
  // but there is no convergence guarantee for restricted index sets.
  bool monotone_violation = false;
};

// Alternating solver for the spectrally-constrained Laplacian estimate:
//   min_{w>=0, U'U=I}  -log det(Diag(lambdas)) + tr(Lw K)
//                      + beta/2 * ||Lw - U Diag(lambdas) U'||_F^2
// Per cycle: c = L*(U Diag(lambdas) U' - K/beta), a projected gradient step
// w <- [w - grad_f(w)/(2p)]_+ restricted to free indices, then U <- the
// eigenvectors of Lw for the p-1 largest eigenvalues (ascending). Runs until
// max|dw| < tol or max_iter. The seed is reserved (the solver is
// deterministic). w_init overrides the data-driven initialization.
SolveResult solve_sgl(const Eigen::MatrixXd& s_hat, const SpectralTarget& target,
                      const SolverConfig& cfg, uint64_t seed,
                      const std::optional<Eigen::VectorXd>& w_init = std::nullopt);

// Edge (i,j) present iff w[pair_index(i,j)] > threshold.
Network adjacency_from_w(const WeightVector& w, double threshold = 1e-8);

}  // namespace grownet
