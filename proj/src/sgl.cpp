#include "grownet/sgl.hpp"

#include <lapacke.h>
#include <stdlib.h>

#include <algorithm>
#include <cmath>
#include <numeric>

extern "C" void openblas_set_num_threads(int) __attribute__((weak));

namespace grownet {

namespace {

// The solver's inner eigendecomposition goes through LAPACK dsyevd, which
// is considerably faster than Eigen's QR iteration at the block sizes the
// pipeline solves. OpenBLAS is pinned to one thread: its pool costs more
// than it saves at these sizes, concurrency lives in the block-level loops,
// and serial kernels keep results identical at any thread count.
__attribute__((constructor)) void pin_blas_threads() {
  setenv("OPENBLAS_NUM_THREADS", "1", 1);
  if (openblas_set_num_threads) openblas_set_num_threads(1);
}

// Full symmetric eigendecomposition, eigenvalues ascending.
void eigh_inplace(Eigen::MatrixXd& a, Eigen::VectorXd& eigenvalues) {
  const auto p = static_cast<lapack_int>(a.rows());
  eigenvalues.resize(p);
  const lapack_int info = LAPACKE_dsyevd(LAPACK_COL_MAJOR, 'V', 'L', p,
                                         a.data(), p, eigenvalues.data());
  if (info != 0)
    throw NumericalError("dsyevd failed with info " + std::to_string(info));
}

}  // namespace

int pair_index(int i, int j, int p) {
  if (!(0 <= j && j < i && i < p))
    throw DomainError("pair_index requires 0 <= j < i < p");
  return j * p - j * (j + 1) / 2 + (i - j) - 1;
}

Eigen::MatrixXd lap_op(const WeightVector& wv) {
  const int p = wv.p;
  if (wv.w.size() != static_cast<Eigen::Index>(p) * (p - 1) / 2)
    throw ContractError("weight vector length does not match p");
  Eigen::MatrixXd L = Eigen::MatrixXd::Zero(p, p);
  int k = 0;
  for (int j = 0; j < p - 1; ++j) {
    for (int i = j + 1; i < p; ++i, ++k) {
      const double w = wv.w[k];
      L(i, j) = -w;
      L(j, i) = -w;
      L(i, i) += w;
      L(j, j) += w;
    }
  }
  return L;
}

Eigen::VectorXd lap_adjoint(const Eigen::MatrixXd& y) {
  const int p = static_cast<int>(y.rows());
  if (y.cols() != p) throw ContractError("lap_adjoint needs a square matrix");
  if (!y.isApprox(y.transpose(), 1e-9))
    throw ContractError("lap_adjoint needs a symmetric matrix");
  Eigen::VectorXd out(static_cast<Eigen::Index>(p) * (p - 1) / 2);
  int k = 0;
  for (int j = 0; j < p - 1; ++j)
    for (int i = j + 1; i < p; ++i, ++k)
      out[k] = y(i, i) - y(i, j) - y(j, i) + y(j, j);
  return out;
}

Eigen::VectorXd grad_f(const WeightVector& wv, const Eigen::VectorXd& c) {
  if (c.size() != wv.w.size()) throw ContractError("gradient dimension mismatch");
  return lap_adjoint(lap_op(wv)) - c;
}

Eigen::MatrixXd build_K(const Eigen::MatrixXd& s_hat, double alpha) {
  const int p = static_cast<int>(s_hat.rows());
  if (s_hat.cols() != p) throw ContractError("covariance must be square");
  if (!s_hat.isApprox(s_hat.transpose(), 1e-9))
    throw ContractError("covariance must be symmetric");
  return s_hat + alpha * (2.0 * Eigen::MatrixXd::Identity(p, p) -
                          Eigen::MatrixXd::Ones(p, p));
}

// The linear cost of weight k in tr(Lw K) is (L*K)_k = K_ii + K_jj - 2K_ij,
// so mass goes to pairs with below-average cost (for a correlation-shaped K
// these are the above-average-correlation pairs). The target trace implies
// an expected edge count m = sum(lambdas)/2; the support is capped at twice
// that, and the total is scaled so tr(Lw0) matches the target spectrum.
// Both choices shorten the transient spent draining misplaced weight, whose
// rate is limited by the fixed 1/(2p) step.
Eigen::VectorXd default_w_init(const Eigen::MatrixXd& K,
                               const SpectralTarget& target) {
  const Eigen::VectorXd cost = lap_adjoint(K);
  Eigen::VectorXd score = (-cost).array() + cost.mean();
  score = score.cwiseMax(0.0);
  if (!(score.sum() > 0.0)) score = Eigen::VectorXd::Ones(score.size());

  const auto implied_edges =
      static_cast<Eigen::Index>(std::llround(0.5 * target.lambdas.sum()));
  const Eigen::Index cap =
      std::min<Eigen::Index>(score.size(), std::max<Eigen::Index>(1, 2 * implied_edges));

  std::vector<Eigen::Index> order(static_cast<std::size_t>(score.size()));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&score](Eigen::Index a, Eigen::Index b) {
    return score[a] > score[b];
  });
  Eigen::VectorXd w0 = Eigen::VectorXd::Zero(score.size());
  double sum = 0.0;
  for (Eigen::Index r = 0; r < cap; ++r) {
    const Eigen::Index k = order[static_cast<std::size_t>(r)];
    if (!(score[k] > 0.0)) break;
    w0[k] = score[k];
    sum += score[k];
  }
  if (!(sum > 0.0)) {
    w0 = Eigen::VectorXd::Ones(score.size());
    sum = w0.sum();
  }
  // tr(Lw) = 2 * sum(w).
  return w0 * (0.5 * target.lambdas.sum() / sum);
}

SolveResult solve_sgl(const Eigen::MatrixXd& s_hat, const SpectralTarget& target,
                      const SolverConfig& cfg, uint64_t seed,
                      const std::optional<Eigen::VectorXd>& w_init) {
  (void)seed;  // reserved; every step below is deterministic
  const int p = static_cast<int>(s_hat.rows());
  if (p < 2) throw ContractError("solver needs at least 2 nodes");
  const int q = p - 1;
  if (target.lambdas.size() != q)
    throw ContractError("spectral target must have p-1 entries");
  for (int i = 0; i < q; ++i) {
    if (!(target.lambdas[i] > 0.0))
      throw ContractError("spectral target must be strictly positive");
    if (i > 0 && target.lambdas[i] < target.lambdas[i - 1])
      throw ContractError("spectral target must be ascending");
  }
  if (cfg.max_iter < 1) throw ContractError("max_iter must be >= 1");
  if (!(cfg.tol > 0.0)) throw ContractError("tol must be positive");
  if (!(cfg.beta > 0.0)) throw ContractError("beta must be positive");
  if (cfg.alpha < 0.0) throw ContractError("alpha must be nonnegative");

  const Eigen::Index nw = static_cast<Eigen::Index>(p) * (p - 1) / 2;
  const Eigen::MatrixXd K = build_K(s_hat, cfg.alpha);

  WeightVector wv;
  wv.p = p;
  if (w_init) {
    if (w_init->size() != nw) throw ContractError("w_init length mismatch");
    wv.w = w_init->cwiseMax(0.0);
  } else {
    wv.w = default_w_init(K, target);
  }

  std::vector<int> free;
  if (cfg.free_indices) {
    free = *cfg.free_indices;
    for (int k : free)
      if (k < 0 || k >= nw) throw ContractError("free index out of range");
  } else {
    free.resize(static_cast<std::size_t>(nw));
    for (Eigen::Index k = 0; k < nw; ++k) free[static_cast<std::size_t>(k)] = static_cast<int>(k);
  }

  const double step = 1.0 / (2.0 * p);
  const double log_det_term = -target.lambdas.array().log().sum();
  const Eigen::MatrixXd K_over_beta = K / cfg.beta;

  // U0 from the initial Laplacian.
  Eigen::MatrixXd L = lap_op(wv);
  Eigen::MatrixXd vecs = L;
  Eigen::VectorXd vals;
  eigh_inplace(vecs, vals);
  Eigen::MatrixXd U = vecs.rightCols(q);

  const Eigen::VectorXd sqrt_lambdas = target.lambdas.cwiseSqrt();
  Eigen::MatrixXd M(p, p);
  Eigen::MatrixXd half(p, q);
  const auto rebuild_M = [&]() {
    half.noalias() = U * sqrt_lambdas.asDiagonal();
    M.setZero();
    M.selfadjointView<Eigen::Lower>().rankUpdate(half);
    M.triangularView<Eigen::StrictlyUpper>() = M.transpose();
  };
  rebuild_M();

  SolveResult result;
  result.trace.reserve(static_cast<std::size_t>(std::min(cfg.max_iter, 10000)));
  double prev_obj = 0.0;
  bool have_prev = false;

  for (int iter = 1; iter <= cfg.max_iter; ++iter) {
    const Eigen::VectorXd c = lap_adjoint(M - K_over_beta);
    const Eigen::VectorXd grad = lap_adjoint(L) - c;

    double max_delta = 0.0;
    for (int k : free) {
      const double updated = std::max(0.0, wv.w[k] - step * grad[k]);
      max_delta = std::max(max_delta, std::abs(updated - wv.w[k]));
      wv.w[k] = updated;
    }

    L = lap_op(wv);
    vecs = L;
    eigh_inplace(vecs, vals);
    U = vecs.rightCols(q);
    rebuild_M();

    const double fit = (L - M).squaredNorm();
    const double obj =
        log_det_term + (L.array() * K.array()).sum() + 0.5 * cfg.beta * fit;
    result.trace.push_back({iter, obj, max_delta});
    if (have_prev && obj > prev_obj + 1e-8 * std::max(1.0, std::abs(prev_obj)))
      result.monotone_violation = true;
    prev_obj = obj;
    have_prev = true;

    if (max_delta < cfg.tol) {
      result.converged = true;
      break;
    }
  }

  result.w = std::move(wv);
  result.U = std::move(U);
  return result;
}

Network adjacency_from_w(const WeightVector& wv, double threshold) {
  if (threshold < 0.0) throw DomainError("threshold must be nonnegative");
  std::vector<std::pair<int, int>> edges;
  int k = 0;
  for (int j = 0; j < wv.p - 1; ++j)
    for (int i = j + 1; i < wv.p; ++i, ++k)
      if (wv.w[k] > threshold) edges.emplace_back(j, i);
  return make_network(wv.p, std::move(edges));
}

}  // namespace grownet
