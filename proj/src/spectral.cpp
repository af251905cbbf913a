#include "grownet/spectral.hpp"

#include "grownet/rng.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace grownet {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Pearson correlation of x_i(t) against x_j(t + tau) on the co-observed
// window. Returns the correlation and the overlap count.
inline std::pair<double, long> pair_corr(const GrowthPanel& g, Eigen::Index i,
                                         Eigen::Index j, int tau) {
  const Eigen::Index T = g.t();
  const Eigen::Index lo = std::max<Eigen::Index>(0, -tau);
  const Eigen::Index hi = std::min<Eigen::Index>(T, T - tau);
  long n = 0;
  double sx = 0.0, sy = 0.0, sxx = 0.0, syy = 0.0, sxy = 0.0;
  for (Eigen::Index t = lo; t < hi; ++t) {
    if (!g.mask(i, t) || !g.mask(j, t + tau)) continue;
    const double x = g.values(i, t);
    const double y = g.values(j, t + tau);
    ++n;
    sx += x;
    sy += y;
    sxx += x * x;
    syy += y * y;
    sxy += x * y;
  }
  if (n < 2) return {0.0, n};
  const double nn = static_cast<double>(n);
  const double vx = sxx - sx * sx / nn;
  const double vy = syy - sy * sy / nn;
  if (!(vx > 0.0) || !(vy > 0.0)) return {0.0, n};
  double r = (sxy - sx * sy / nn) / std::sqrt(vx * vy);
  r = std::clamp(r, -1.0, 1.0);
  return {r, n};
}

CorrMatrix corr_matrix_impl(const GrowthPanel& g, int tau, int min_overlap,
                            bool parallel) {
  if (!g.rescaled)
    throw ContractError("corr_matrix requires a rescaled panel");
  if (min_overlap < 2) throw DomainError("min_overlap must be >= 2");

  const Eigen::Index n = g.n();
  CorrMatrix c;
  c.n = static_cast<int>(n);
  c.tau = tau;
  c.entries = Eigen::MatrixXd::Zero(n, n);
  c.overlap = Eigen::MatrixXi::Zero(n, n);

  if (tau == 0) {
    // Symmetric: strict upper triangle in a flat loop, mirrored after.
    const long long npairs = static_cast<long long>(n) * (n - 1) / 2;
    const auto row_offset = [n](long long i) {
      return i * n - i * (i + 1) / 2;
    };
#pragma omp parallel for schedule(dynamic, 64) if (parallel)
    for (long long k = 0; k < npairs; ++k) {
      // Row-major unranking of the strict upper triangle; the floating-point
      // guess is corrected against the exact row offsets.
      long long i =
          n - 2 -
          static_cast<long long>(
              std::floor(std::sqrt(0.25 + 2.0 * static_cast<double>(npairs - 1 - k)) - 0.5));
      while (i > 0 && row_offset(i) > k) --i;
      while (i + 1 < n - 1 && row_offset(i + 1) <= k) ++i;
      const long long j = i + 1 + (k - row_offset(i));
      const auto [r, cnt] = pair_corr(g, i, j, 0);
      c.overlap(i, j) = static_cast<int>(cnt);
      c.overlap(j, i) = static_cast<int>(cnt);
      if (cnt >= min_overlap) {
        c.entries(i, j) = r;
        c.entries(j, i) = r;
      }
    }
    for (Eigen::Index i = 0; i < n; ++i) {
      const long cnt = g.observed(i);
      c.overlap(i, i) = static_cast<int>(cnt);
      if (cnt >= 2) c.entries(i, i) = 1.0;
    }
  } else {
#pragma omp parallel for schedule(dynamic, 8) if (parallel)
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index j = 0; j < n; ++j) {
        const auto [r, cnt] = pair_corr(g, i, j, tau);
        c.overlap(i, j) = static_cast<int>(cnt);
        if (cnt >= min_overlap) c.entries(i, j) = r;
      }
    }
  }
  return c;
}

}  // namespace

CorrMatrix corr_matrix(const GrowthPanel& g, int tau, int min_overlap) {
  return corr_matrix_impl(g, tau, min_overlap, true);
}

CorrMatrix corr_matrix_serial(const GrowthPanel& g, int tau, int min_overlap) {
  return corr_matrix_impl(g, tau, min_overlap, false);
}

std::pair<double, double> mp_edges(double q) {
  if (q < 0.0) throw DomainError("aspect ratio q must be positive");
  if (q == 0.0) return {1.0, 1.0};
  const double s = std::sqrt(q);
  return {(1.0 - s) * (1.0 - s), (1.0 + s) * (1.0 + s)};
}

double mp_cdf(double q, double x) {
  if (!(q > 0.0)) throw DomainError("aspect ratio q must be positive");
  const auto [lo, hi] = mp_edges(q);
  // Point mass at zero of weight 1 - 1/q when q > 1.
  double atom = q > 1.0 ? 1.0 - 1.0 / q : 0.0;
  if (x < 0.0) return 0.0;
  if (x >= hi) return 1.0;
  if (x <= lo) return atom;

  const auto density = [q, lo, hi](double l) {
    return std::sqrt((hi - l) * (l - lo)) / (2.0 * M_PI * q * l);
  };
  // Simpson on [lo, x]; the integrand vanishes at the edges like a square
  // root, so a fixed fine grid is enough for the 1e-6 accuracy needed here.
  const int steps = 4096;
  const double h = (x - lo) / steps;
  double acc = density(lo) + density(x);
  for (int k = 1; k < steps; ++k)
    acc += density(lo + k * h) * (k % 2 == 1 ? 4.0 : 2.0);
  return std::min(1.0, atom + acc * h / 3.0);
}

SpectrumReport eigendecompose(const CorrMatrix& c, double aspect_ratio) {
  if (c.tau != 0)
    throw ContractError("eigendecompose requires a symmetric tau = 0 matrix");
  if (!(aspect_ratio > 0.0)) throw DomainError("aspect ratio q must be positive");

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(c.entries);
  if (es.info() != Eigen::Success)
    throw NumericalError("eigendecomposition failed to converge");

  SpectrumReport rep;
  rep.eigenvalues = es.eigenvalues();
  rep.eigenvectors = es.eigenvectors();
  rep.aspect_ratio = aspect_ratio;
  std::tie(rep.bulk_lo, rep.bulk_hi) = mp_edges(aspect_ratio);
  rep.benchmark = "marchenko-pastur";

  const double reconstruction_err =
      (c.entries - rep.eigenvectors * rep.eigenvalues.asDiagonal() *
                       rep.eigenvectors.transpose())
          .norm();
  const double scale = c.entries.norm();
  if (scale > 0.0 && reconstruction_err / scale > 1e-8)
    throw NumericalError("eigendecomposition reconstruction error " +
                         std::to_string(reconstruction_err / scale));

  for (int k = 0; k < rep.eigenvalues.size(); ++k)
    if (rep.eigenvalues[k] < rep.bulk_lo || rep.eigenvalues[k] > rep.bulk_hi)
      rep.outlier_indices.push_back(k);
  const int top = static_cast<int>(rep.eigenvalues.size()) - 1;
  rep.top_mode_in_bulk = top >= 0 && rep.eigenvalues[top] <= rep.bulk_hi;
  return rep;
}

std::vector<Eigen::VectorXd> surrogate_spectrum(const GrowthPanel& g, int n_sets,
                                                uint64_t seed, SurrogateSource source,
                                                int min_overlap) {
  if (n_sets < 1) throw DomainError("n_sets must be >= 1");
  const Eigen::Index n = g.n();
  const Eigen::Index t = g.t();

  // Pooled empirical distribution of all observed values.
  std::vector<double> pool;
  if (source == SurrogateSource::Empirical) {
    pool.reserve(static_cast<std::size_t>(n) * t);
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index tt = 0; tt < t; ++tt)
        if (g.mask(i, tt)) pool.push_back(g.values(i, tt));
    if (pool.empty()) throw EmptyPanelError("panel has no observed values");
  }

  std::vector<Eigen::VectorXd> spectra(n_sets);
  std::exception_ptr failure;
#pragma omp parallel for schedule(dynamic)
  for (int s = 0; s < n_sets; ++s) {
    try {
      Rng rng(derive_seed(seed, static_cast<uint64_t>(s)));
      GrowthPanel surrogate = g;
      surrogate.rescaled = false;
      for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index tt = 0; tt < t; ++tt) {
          if (!g.mask(i, tt)) continue;
          surrogate.values(i, tt) =
              source == SurrogateSource::Empirical
                  ? pool[static_cast<std::size_t>(rng.uniform_int(static_cast<int>(pool.size())))]
                  : rng.normal();
        }
      }
      const GrowthPanel rescaled = rescale_loo(surrogate);
      const CorrMatrix c = corr_matrix_serial(rescaled, 0, min_overlap);
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(c.entries,
                                                        Eigen::EigenvaluesOnly);
      spectra[s] = es.eigenvalues();
    } catch (...) {
#pragma omp critical
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);
  return spectra;
}

std::pair<double, double> surrogate_bulk(const std::vector<Eigen::VectorXd>& spectra) {
  if (spectra.empty()) throw DomainError("no surrogate spectra");
  const auto s_count = spectra.size();
  std::vector<double> maxima(s_count);
  std::vector<double> minima(s_count);
  for (std::size_t s = 0; s < s_count; ++s) {
    maxima[s] = spectra[s].maxCoeff();
    minima[s] = spectra[s].minCoeff();
  }
  const auto spread = [](const std::vector<double>& v) {
    if (v.size() < 2) return 0.0;
    double mean = 0.0;
    for (double x : v) mean += x;
    mean /= static_cast<double>(v.size());
    double ss = 0.0;
    for (double x : v) ss += (x - mean) * (x - mean);
    return std::sqrt(ss / static_cast<double>(v.size() - 1));
  };
  // Envelope of the per-set edges plus a 3-sigma margin of their
  // set-to-set fluctuation; a panel statistically identical to its
  // surrogates then lands inside with high probability.
  const double hi_raw = *std::max_element(maxima.begin(), maxima.end());
  const double lo_raw = *std::min_element(minima.begin(), minima.end());
  const double margin_hi =
      std::max(3.0 * spread(maxima), 0.01 * (hi_raw - lo_raw));
  const double margin_lo =
      std::max(3.0 * spread(minima), 0.01 * (hi_raw - lo_raw));
  return {lo_raw - margin_lo, hi_raw + margin_hi};
}

Series extract_mode(const GrowthPanel& g, const Eigen::VectorXd& u) {
  if (u.size() != g.n()) throw ContractError("mode vector length mismatch");
  if (u.norm() == 0.0) throw DomainError("mode vector is zero");
  if (std::abs(u.norm() - 1.0) > 1e-9)
    throw DomainError("mode vector must be unit norm");

  const Eigen::Index n = g.n();
  const Eigen::Index t = g.t();
  Series v;
  v.values = Eigen::VectorXd::Constant(t, kNaN);
  v.mask = BoolVector::Constant(t, false);
  for (Eigen::Index tt = 0; tt < t; ++tt) {
    double num = 0.0;
    double den = 0.0;
    bool any = false;
    for (Eigen::Index i = 0; i < n; ++i) {
      if (!g.mask(i, tt)) continue;
      any = true;
      num += u[i] * g.values(i, tt);
      den += u[i] * u[i];
    }
    if (any && den > 0.0) {
      v.values[tt] = num / den;
      v.mask[tt] = true;
    }
  }
  return v;
}

GrowthPanel remove_mode(const GrowthPanel& g, const Eigen::VectorXd& u) {
  const Series v = extract_mode(g, u);
  GrowthPanel out = g;
  for (Eigen::Index i = 0; i < g.n(); ++i)
    for (Eigen::Index tt = 0; tt < g.t(); ++tt)
      if (g.mask(i, tt) && v.mask[tt])
        out.values(i, tt) = g.values(i, tt) - u[i] * v.values[tt];
  return out;
}

void orient_sign(Eigen::VectorXd& u) {
  if (u.sum() < 0.0) u = -u;
}

CleanResult clean_market_mode(const GrowthPanel& g, const CleanOptions& opts) {
  if (!g.rescaled)
    throw ContractError("clean_market_mode requires a rescaled panel");
  if (opts.modes_to_remove < 1)
    throw DomainError("modes_to_remove must be >= 1");

  CleanResult result;
  GrowthPanel current = g;
  const double q = static_cast<double>(g.n()) / static_cast<double>(g.t());

  for (int pass = 0; pass < opts.modes_to_remove; ++pass) {
    const CorrMatrix c = corr_matrix(current, 0, opts.min_overlap);
    SpectrumReport rep = eigendecompose(c, q);

    if (opts.n_surrogates > 0) {
      const auto spectra =
          surrogate_spectrum(current, opts.n_surrogates,
                             derive_seed(opts.seed, "surrogate-pass-" +
                                                        std::to_string(pass)),
                             opts.source, opts.min_overlap);
      std::tie(rep.bulk_lo, rep.bulk_hi) = surrogate_bulk(spectra);
      rep.benchmark = "surrogate";
      rep.outlier_indices.clear();
      for (int k = 0; k < rep.eigenvalues.size(); ++k)
        if (rep.eigenvalues[k] < rep.bulk_lo || rep.eigenvalues[k] > rep.bulk_hi)
          rep.outlier_indices.push_back(k);
      const int top = static_cast<int>(rep.eigenvalues.size()) - 1;
      rep.top_mode_in_bulk = rep.eigenvalues[top] <= rep.bulk_hi;
      if (pass == 0) {
        Eigen::VectorXd avg = Eigen::VectorXd::Zero(spectra.front().size());
        for (const auto& s : spectra) avg += s;
        result.surrogate_eigenvalues = avg / static_cast<double>(spectra.size());
      }
    }

    Eigen::VectorXd u = rep.eigenvectors.col(rep.eigenvectors.cols() - 1);
    orient_sign(u);
    result.modes.push_back(extract_mode(current, u));
    result.reports.push_back(std::move(rep));
    current = rescale_loo(remove_mode(current, u));
  }
  result.cleaned = std::move(current);
  return result;
}

SectorCleanResult sector_clean(const GrowthPanel& g,
                               const std::vector<std::string>& sector_labels) {
  if (sector_labels.size() != static_cast<std::size_t>(g.n()))
    throw ContractError("every firm needs a sector label");

  const Eigen::Index n = g.n();
  const Eigen::Index t = g.t();

  // Group firms by sector label.
  std::vector<std::vector<Eigen::Index>> groups;
  {
    std::vector<std::string> names;
    for (Eigen::Index i = 0; i < n; ++i) {
      auto it = std::find(names.begin(), names.end(), sector_labels[i]);
      if (it == names.end()) {
        names.push_back(sector_labels[i]);
        groups.emplace_back();
        groups.back().push_back(i);
      } else {
        groups[static_cast<std::size_t>(it - names.begin())].push_back(i);
      }
    }
  }

  SectorCleanResult res;
  res.panel = g;
  res.panel.rescaled = false;
  res.loadings = Eigen::VectorXd::Zero(n);

  for (const auto& members : groups) {
    if (members.size() < 2) {
      for (const Eigen::Index i : members) res.unchanged_firms.push_back(static_cast<int>(i));
      continue;
    }
    // Sector sum over observed firms at each quarter.
    Eigen::VectorXd s = Eigen::VectorXd::Zero(t);
    BoolVector s_mask = BoolVector::Constant(t, false);
    for (const Eigen::Index i : members) {
      for (Eigen::Index tt = 0; tt < t; ++tt) {
        if (!g.mask(i, tt)) continue;
        s[tt] += g.values(i, tt);
        s_mask[tt] = true;
      }
    }

    for (const Eigen::Index i : members) {
      long cnt = 0;
      double sx = 0.0, ss = 0.0, sxx = 0.0, sss = 0.0, sxs = 0.0;
      for (Eigen::Index tt = 0; tt < t; ++tt) {
        if (!g.mask(i, tt)) continue;  // firm observed implies sector sum defined
        const double x = g.values(i, tt);
        const double y = s[tt];
        ++cnt;
        sx += x;
        ss += y;
        sxx += x * x;
        sss += y * y;
        sxs += x * y;
      }
      const double nn = static_cast<double>(cnt);
      const double var_x = sxx - sx * sx / nn;
      const double var_s = sss - ss * ss / nn;
      if (cnt < 2 || !(var_s > 0.0) || !(var_x > 0.0)) {
        res.unchanged_firms.push_back(static_cast<int>(i));
        continue;
      }
      const double cov = sxs - sx * ss / nn;
      res.loadings[i] = cov / std::sqrt(var_x * var_s);
      // OLS residual: the correlation loading applied in standardized units.
      const double slope = cov / var_s;
      const double s_mean = ss / nn;
      for (Eigen::Index tt = 0; tt < t; ++tt)
        if (g.mask(i, tt))
          res.panel.values(i, tt) = g.values(i, tt) - slope * (s[tt] - s_mean);
    }
  }
  return res;
}

CorrMatrix sym_lag_corr(const GrowthPanel& g, int min_overlap) {
  const CorrMatrix c0 = corr_matrix(g, 0, min_overlap);
  const CorrMatrix c1 = corr_matrix(g, 1, min_overlap);
  const CorrMatrix cm1 = corr_matrix(g, -1, min_overlap);
  CorrMatrix out = c0;
  out.entries = c0.entries + 0.5 * (c1.entries + cm1.entries);
  return out;
}

}  // namespace grownet
