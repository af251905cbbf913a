#include "grownet/pipeline.hpp"

#include "grownet/rng.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <numeric>

namespace grownet {

namespace {

SpectralTarget average_spectra(int n, int n_samples, uint64_t seed,
                               const std::function<Network(uint64_t)>& draw) {
  if (n < 2) throw DomainError("need at least 2 nodes");
  if (n_samples < 1) throw DomainError("n_samples must be >= 1");

  // Per-sample slots, averaged serially afterwards, so the result does not
  // depend on thread count.
  Eigen::MatrixXd spectra(n, n_samples);
  std::exception_ptr failure;
#pragma omp parallel for schedule(dynamic)
  for (int s = 0; s < n_samples; ++s) {
    try {
      const Network net = draw(derive_seed(seed, static_cast<uint64_t>(s)));
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(laplacian(net),
                                                        Eigen::EigenvaluesOnly);
      spectra.col(s) = es.eigenvalues();
    } catch (...) {
#pragma omp critical
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);

  Eigen::VectorXd avg = Eigen::VectorXd::Zero(n);
  for (int s = 0; s < n_samples; ++s) avg += spectra.col(s);
  avg /= static_cast<double>(n_samples);

  SpectralTarget target;
  target.lambdas = avg.tail(n - 1).cwiseMax(1e-9);
  return target;
}

double quantile_threshold(const Eigen::VectorXd& w, const std::vector<int>& universe,
                          double density_goal,
                          const std::vector<std::pair<double, double>>& probes) {
  std::vector<double> vals;
  vals.reserve(universe.size());
  for (int k : universe) vals.push_back(w[k]);
  std::sort(vals.begin(), vals.end(), std::greater<>());
  const auto want = static_cast<std::size_t>(
      std::llround(density_goal * static_cast<double>(universe.size())));
  if (want == 0) return vals.empty() ? 0.0 : vals.front() + 1.0;
  if (want > vals.size() || !(vals[want - 1] > 0.0))
    throw CalibrationError(
        "quantile fallback cannot reach density goal: only " +
            std::to_string(std::count_if(vals.begin(), vals.end(),
                                         [](double v) { return v > 0.0; })) +
            " positive weights for " + std::to_string(want) + " edges",
        probes);
  // Midpoint between the k-th and (k+1)-th largest weights.
  const double upper = vals[want - 1];
  const double lower = want < vals.size() ? vals[want] : 0.0;
  return 0.5 * (upper + lower);
}

}  // namespace

SpectralTarget spectral_target_er(int n, double p, int n_samples, uint64_t seed) {
  return average_spectra(n, n_samples, seed,
                         [n, p](uint64_t s) { return generate_er(n, p, s); });
}

SpectralTarget spectral_target_block(const std::vector<int>& sizes,
                                     const Eigen::MatrixXd& densities, int n_samples,
                                     uint64_t seed) {
  int n = 0;
  std::vector<int> partition;
  for (std::size_t b = 0; b < sizes.size(); ++b) {
    if (sizes[b] < 1) throw DomainError("block sizes must be positive");
    n += sizes[b];
    partition.insert(partition.end(), static_cast<std::size_t>(sizes[b]),
                     static_cast<int>(b));
  }
  const BlockScheme scheme = make_block_scheme(std::move(partition), densities);
  return average_spectra(n, n_samples, seed, [&scheme](uint64_t s) {
    return generate_sbm(scheme, s);
  });
}

CalibrationResult calibrate_alpha(const Eigen::MatrixXd& s_hat,
                                  const SpectralTarget& target, double density_goal,
                                  const SolverConfig& cfg, uint64_t seed) {
  return calibrate_alpha_ext(s_hat, target, density_goal, cfg, seed, std::nullopt,
                             std::nullopt, std::nullopt);
}

CalibrationResult calibrate_alpha_ext(const Eigen::MatrixXd& s_hat,
                                      const SpectralTarget& target,
                                      double density_goal, const SolverConfig& cfg,
                                      uint64_t seed,
                                      const std::optional<std::vector<int>>& free_indices,
                                      const std::optional<std::vector<int>>& density_indices,
                                      const std::optional<Eigen::VectorXd>& w_init) {
  if (!(density_goal > 0.0 && density_goal < 1.0))
    throw DomainError("density goal must be in (0, 1)");
  const int p = static_cast<int>(s_hat.rows());
  const Eigen::Index nw = static_cast<Eigen::Index>(p) * (p - 1) / 2;

  std::vector<int> universe;
  if (density_indices) {
    universe = *density_indices;
    for (int k : universe)
      if (k < 0 || k >= nw) throw ContractError("density index out of range");
  } else {
    universe.resize(static_cast<std::size_t>(nw));
    std::iota(universe.begin(), universe.end(), 0);
  }
  if (universe.empty()) throw ContractError("empty density universe");

  constexpr double kZeroThreshold = 1e-8;
  constexpr int kMaxProbes = 20;
  constexpr double kBand = 0.10;  // +-10% relative

  const auto density_of = [&](const Eigen::VectorXd& w) {
    long long cnt = 0;
    for (int k : universe)
      if (w[k] > kZeroThreshold) ++cnt;
    return static_cast<double>(cnt) / static_cast<double>(universe.size());
  };

  CalibrationResult res;
  std::optional<Eigen::VectorXd> warm = w_init;

  const auto probe = [&](double alpha) {
    SolverConfig probe_cfg = cfg;
    probe_cfg.alpha = alpha;
    probe_cfg.free_indices = free_indices;
    const SolveResult sr = solve_sgl(s_hat, target, probe_cfg, seed, warm);
    if (!sr.converged) res.converged = false;
    warm = sr.w.w;  // warm start the next probe
    const double d = density_of(sr.w.w);
    res.probes.emplace_back(alpha, d);
    return std::make_pair(sr, d);
  };

  // Densest solve: alpha = 0.
  auto [sol_dense, d0] = probe(0.0);
  Eigen::VectorXd w_dense = sol_dense.w.w;

  const auto finish = [&](double alpha, const SolveResult& sr, double d) {
    res.alpha = alpha;
    res.w = sr.w;
    res.threshold = kZeroThreshold;
    res.density_achieved = d;
    res.net = adjacency_from_w(sr.w, kZeroThreshold);
    return res;
  };
  const auto finish_fallback = [&]() {
    // Quantile thresholding of the densest solve.
    WeightVector wv;
    wv.p = p;
    wv.w = w_dense;
    const double thr = quantile_threshold(w_dense, universe, density_goal, res.probes);
    res.alpha = 0.0;
    res.w = wv;
    res.threshold = thr;
    res.quantile_fallback = true;
    long long cnt = 0;
    for (int k : universe)
      if (w_dense[k] > thr) ++cnt;
    res.density_achieved =
        static_cast<double>(cnt) / static_cast<double>(universe.size());
    res.net = adjacency_from_w(wv, thr);
    return res;
  };

  if (std::abs(d0 - density_goal) <= kBand * density_goal)
    return finish(0.0, sol_dense, d0);
  if (d0 < density_goal) return finish_fallback();  // alpha only sparsifies

  // Bracket: grow alpha geometrically until the solve is at or below goal.
  double lo = 0.0;
  double d_lo = d0;
  double hi = 0.125;
  bool bracketed = false;
  SolveResult sol_hi;
  double d_hi = 0.0;
  while (static_cast<int>(res.probes.size()) < kMaxProbes) {
    std::tie(sol_hi, d_hi) = probe(hi);
    if (std::abs(d_hi - density_goal) <= kBand * density_goal)
      return finish(hi, sol_hi, d_hi);
    if (d_hi <= density_goal) {
      bracketed = true;
      break;
    }
    lo = hi;
    d_lo = d_hi;
    hi *= 4.0;
    if (hi > 1e7) break;
  }
  if (!bracketed) return finish_fallback();

  // Bisection within [lo, hi].
  while (static_cast<int>(res.probes.size()) < kMaxProbes) {
    const double mid = 0.5 * (lo + hi);
    auto [sol_mid, d_mid] = probe(mid);
    if (std::abs(d_mid - density_goal) <= kBand * density_goal)
      return finish(mid, sol_mid, d_mid);
    // Density should fall between the bracket densities; a clear violation
    // means the alpha-density relation is not monotone here.
    if (d_mid > d_lo + 0.02 || d_mid < d_hi - 0.02) return finish_fallback();
    if (d_mid > density_goal) {
      lo = mid;
      d_lo = d_mid;
    } else {
      hi = mid;
      d_hi = d_mid;
    }
  }
  return finish_fallback();
}

ReconstructionResult reconstruct_network(const CorrMatrix& c_clean,
                                         const ReconstructionPlan& plan) {
  const int n = c_clean.n;
  if (static_cast<int>(plan.partition.size()) != n)
    throw ContractError("plan partition must cover every firm");
  if (c_clean.tau != 0)
    throw ContractError("reconstruction expects the tau = 0 correlation");

  // Blocks in lexicographic label order.
  std::vector<std::string> blocks;
  for (const auto& lbl : plan.partition)
    if (std::find(blocks.begin(), blocks.end(), lbl) == blocks.end())
      blocks.push_back(lbl);
  std::sort(blocks.begin(), blocks.end());

  std::vector<std::vector<int>> members(blocks.size());
  for (int i = 0; i < n; ++i) {
    const auto b = static_cast<std::size_t>(
        std::find(blocks.begin(), blocks.end(), plan.partition[static_cast<std::size_t>(i)]) -
        blocks.begin());
    members[b].push_back(i);
  }

  for (const auto& b : blocks) {
    if (!plan.target_density_diag.count(b))
      throw DataError("plan is missing a diagonal density for sector '" + b + "'");
  }
  for (std::size_t a = 0; a < blocks.size(); ++a)
    for (std::size_t b = a + 1; b < blocks.size(); ++b)
      if (!plan.target_density_offdiag.count({blocks[a], blocks[b]}))
        throw DataError("plan is missing a cross density for sectors '" +
                        blocks[a] + "' and '" + blocks[b] + "'");

  const auto submatrix = [&](const std::vector<int>& idx) {
    Eigen::MatrixXd s(idx.size(), idx.size());
    for (std::size_t r = 0; r < idx.size(); ++r)
      for (std::size_t c = 0; c < idx.size(); ++c)
        s(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
            c_clean.entries(idx[r], idx[c]);
    return s;
  };

  ReconstructionResult result;
  result.report.diagonal.resize(blocks.size());

  // Stage 1: diagonal blocks, independent solves.
  std::vector<WeightVector> block_w(blocks.size());
  std::vector<std::vector<std::pair<int, int>>> block_edges(blocks.size());
  std::string stage1_failure;
  std::vector<char> stage1_ok(blocks.size(), 0);

#pragma omp parallel for schedule(dynamic)
  for (std::size_t b = 0; b < blocks.size(); ++b) {
    const auto t0 = std::chrono::steady_clock::now();
    try {
      const auto& idx = members[b];
      const int nb = static_cast<int>(idx.size());
      const double goal = plan.target_density_diag.at(blocks[b]);
      if (nb < 2)
        throw DataError("sector '" + blocks[b] + "' has fewer than 2 firms");
      const SpectralTarget target =
          spectral_target_er(nb, goal, plan.spectra_samples,
                             derive_seed(plan.seed, "target-diag-" + blocks[b]));
      const CalibrationResult cal =
          calibrate_alpha(submatrix(idx), target, goal, plan.solver,
                          derive_seed(plan.seed, "cal-diag-" + blocks[b]));
      for (const auto& [u, v] : cal.net.edges)
        block_edges[b].emplace_back(std::min(idx[static_cast<std::size_t>(u)], idx[static_cast<std::size_t>(v)]),
                                    std::max(idx[static_cast<std::size_t>(u)], idx[static_cast<std::size_t>(v)]));
      block_w[b] = cal.w;
      auto& rep = result.report.diagonal[b];
      rep.block_a = rep.block_b = blocks[b];
      rep.alpha = cal.alpha;
      rep.density_goal = goal;
      rep.density_achieved = cal.density_achieved;
      rep.converged = cal.converged;
      rep.quantile_fallback = cal.quantile_fallback;
      rep.seconds = std::chrono::duration<double>(
                        std::chrono::steady_clock::now() - t0)
                        .count();
      stage1_ok[b] = 1;
    } catch (const std::exception& e) {
#pragma omp critical
      if (stage1_failure.empty())
        stage1_failure = "sector '" + blocks[b] + "': " + e.what();
    }
  }

  if (!stage1_failure.empty()) {
    ReconstructionResult partial;
    std::vector<std::pair<int, int>> edges;
    for (std::size_t b = 0; b < blocks.size(); ++b) {
      if (!stage1_ok[b]) continue;
      edges.insert(edges.end(), block_edges[b].begin(), block_edges[b].end());
      partial.report.diagonal.push_back(result.report.diagonal[b]);
    }
    partial.net = make_network(n, std::move(edges));
    throw PartialResultError("diagonal block calibration failed: " + stage1_failure,
                             std::move(partial));
  }

  // Stage 2: off-diagonal pairs, frozen within-block weights.
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  for (std::size_t a = 0; a < blocks.size(); ++a)
    for (std::size_t b = a + 1; b < blocks.size(); ++b) pairs.emplace_back(a, b);

  result.report.offdiagonal.resize(pairs.size());
  std::vector<std::vector<std::pair<int, int>>> cross_edges(pairs.size());
  std::string stage2_failure;
  std::vector<char> stage2_ok(pairs.size(), 0);

#pragma omp parallel for schedule(dynamic)
  for (std::size_t pi = 0; pi < pairs.size(); ++pi) {
    const auto t0 = std::chrono::steady_clock::now();
    try {
      const auto [a, b] = pairs[pi];
      const auto& ia = members[a];
      const auto& ib = members[b];
      const int na = static_cast<int>(ia.size());
      const int nb = static_cast<int>(ib.size());
      const int np = na + nb;
      std::vector<int> idx = ia;
      idx.insert(idx.end(), ib.begin(), ib.end());

      const double goal_aa = plan.target_density_diag.at(blocks[a]);
      const double goal_bb = plan.target_density_diag.at(blocks[b]);
      const double goal_ab =
          plan.target_density_offdiag.at({blocks[a], blocks[b]});

      Eigen::MatrixXd densities(2, 2);
      densities << goal_aa, goal_ab, goal_ab, goal_bb;
      const SpectralTarget target = spectral_target_block(
          {na, nb}, densities, plan.spectra_samples,
          derive_seed(plan.seed, "target-off-" + blocks[a] + "|" + blocks[b]));

      SolverConfig pair_solver = plan.solver;
      if (plan.offdiag_max_iter > 0) pair_solver.max_iter = plan.offdiag_max_iter;

      // Joint weight vector: within-block entries frozen at stage-1 values,
      // cross entries free.
      const Eigen::MatrixXd s_ab = submatrix(idx);
      // Free cross entries start from the solver's data-driven heuristic;
      // the frozen within-block entries are overwritten below.
      Eigen::VectorXd w0 = default_w_init(build_K(s_ab, 0.0), target);
      for (int j = 0; j < na; ++j)
        for (int i = j + 1; i < na; ++i)
          w0[pair_index(i, j, np)] = block_w[a].w[pair_index(i, j, na)];
      for (int j = 0; j < nb; ++j)
        for (int i = j + 1; i < nb; ++i)
          w0[pair_index(na + i, na + j, np)] = block_w[b].w[pair_index(i, j, nb)];

      std::vector<int> cross;
      cross.reserve(static_cast<std::size_t>(na) * static_cast<std::size_t>(nb));
      for (int j = 0; j < na; ++j)
        for (int i = na; i < np; ++i) cross.push_back(pair_index(i, j, np));

      const CalibrationResult cal = calibrate_alpha_ext(
          s_ab, target, goal_ab, pair_solver,
          derive_seed(plan.seed, "cal-off-" + blocks[a] + "|" + blocks[b]), cross,
          cross, w0);

      for (int j = 0; j < na; ++j) {
        for (int i = na; i < np; ++i) {
          if (cal.w.w[pair_index(i, j, np)] > cal.threshold) {
            const int gu = idx[static_cast<std::size_t>(j)];
            const int gv = idx[static_cast<std::size_t>(i)];
            cross_edges[pi].emplace_back(std::min(gu, gv), std::max(gu, gv));
          }
        }
      }
      auto& rep = result.report.offdiagonal[pi];
      rep.block_a = blocks[a];
      rep.block_b = blocks[b];
      rep.alpha = cal.alpha;
      rep.density_goal = goal_ab;
      rep.density_achieved = cal.density_achieved;
      rep.converged = cal.converged;
      rep.quantile_fallback = cal.quantile_fallback;
      rep.seconds = std::chrono::duration<double>(
                        std::chrono::steady_clock::now() - t0)
                        .count();
      stage2_ok[pi] = 1;
    } catch (const std::exception& e) {
#pragma omp critical
      if (stage2_failure.empty())
        stage2_failure = "sector pair '" + blocks[pairs[pi].first] + "|" +
                         blocks[pairs[pi].second] + "': " + e.what();
    }
  }

  std::vector<std::pair<int, int>> edges;
  for (const auto& be : block_edges) edges.insert(edges.end(), be.begin(), be.end());
  if (!stage2_failure.empty()) {
    ReconstructionResult partial;
    partial.report.diagonal = result.report.diagonal;
    for (std::size_t pi = 0; pi < pairs.size(); ++pi) {
      if (!stage2_ok[pi]) continue;
      edges.insert(edges.end(), cross_edges[pi].begin(), cross_edges[pi].end());
      partial.report.offdiagonal.push_back(result.report.offdiagonal[pi]);
    }
    partial.net = make_network(n, std::move(edges));
    throw PartialResultError(
        "off-diagonal block calibration failed: " + stage2_failure,
        std::move(partial));
  }

  for (const auto& ce : cross_edges) edges.insert(edges.end(), ce.begin(), ce.end());
  result.net = make_network(n, std::move(edges));
  return result;
}

}  // namespace grownet
