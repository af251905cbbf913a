#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "grownet/rng.hpp"
#include "grownet/spectral.hpp"
#include "grownet/synth.hpp"
#include "test_helpers.hpp"

#include <cmath>

using namespace grownet;
using grownet::testing::kNaN;
using grownet::testing::make_panel;

namespace {

GrowthPanel random_rescaled_panel(int n, int t, uint64_t seed) {
  Rng rng(seed);
  std::vector<std::vector<double>> rows(static_cast<std::size_t>(n),
                                        std::vector<double>(static_cast<std::size_t>(t)));
  for (auto& row : rows)
    for (auto& v : row) v = rng.normal();
  return rescale_loo(make_panel(rows));
}

double pearson(const Eigen::VectorXd& x, const Eigen::VectorXd& y) {
  const double mx = x.mean();
  const double my = y.mean();
  const Eigen::VectorXd dx = x.array() - mx;
  const Eigen::VectorXd dy = y.array() - my;
  return dx.dot(dy) / std::sqrt(dx.squaredNorm() * dy.squaredNorm());
}

}  // namespace

TEST_CASE("identical rows correlate to exactly 1") {
  Rng rng(11);
  std::vector<double> row(20);
  for (auto& v : row) v = rng.normal();
  const GrowthPanel g = make_panel({row, row}, true);
  const CorrMatrix c = corr_matrix(g, 0, 8);
  CHECK(c.entries(0, 1) == 1.0);
  CHECK(c.entries(0, 0) == 1.0);
  CHECK(c.overlap(0, 1) == 20);
}

TEST_CASE("disjoint observation windows give zero correlation and overlap") {
  std::vector<double> a(20, kNaN);
  std::vector<double> b(20, kNaN);
  Rng rng(12);
  for (int t = 0; t < 10; ++t) a[static_cast<std::size_t>(t)] = rng.normal();
  for (int t = 10; t < 20; ++t) b[static_cast<std::size_t>(t)] = rng.normal();
  const CorrMatrix c = corr_matrix(make_panel({a, b}, true), 0, 4);
  CHECK(c.entries(0, 1) == 0.0);
  CHECK(c.overlap(0, 1) == 0);
}

TEST_CASE("a one-quarter shift shows up at lag one") {
  Rng rng(13);
  std::vector<double> base(6);
  for (auto& v : base) v = rng.normal();
  std::vector<double> shifted(6);
  shifted[0] = rng.normal();
  for (int t = 1; t < 6; ++t)
    shifted[static_cast<std::size_t>(t)] = base[static_cast<std::size_t>(t - 1)];
  const CorrMatrix c = corr_matrix(make_panel({base, shifted}, true), 1, 4);
  CHECK(c.entries(0, 1) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("pairwise-complete equals the standard correlation when fully observed") {
  const GrowthPanel g = random_rescaled_panel(12, 60, 21);
  const CorrMatrix c = corr_matrix(g, 0, 8);
  for (Eigen::Index i = 0; i < g.n(); ++i) {
    for (Eigen::Index j = i + 1; j < g.n(); ++j) {
      const double oracle = pearson(g.values.row(i), g.values.row(j));
      CHECK(c.entries(i, j) == doctest::Approx(oracle).epsilon(1e-12));
    }
  }
}

TEST_CASE("pairs under the overlap floor are zeroed") {
  std::vector<double> a(10);
  std::vector<double> b(10, kNaN);
  Rng rng(31);
  for (auto& v : a) v = rng.normal();
  for (int t = 0; t < 5; ++t) b[static_cast<std::size_t>(t)] = rng.normal();
  const CorrMatrix c = corr_matrix(make_panel({a, b}, true), 0, 8);
  CHECK(c.overlap(0, 1) == 5);
  CHECK(c.entries(0, 1) == 0.0);
}

TEST_CASE("corr_matrix requires a rescaled panel") {
  const GrowthPanel g = make_panel({{1.0, 2.0, 3.0}}, false);
  CHECK_THROWS_AS(corr_matrix(g, 0, 2), ContractError);
}

TEST_CASE("eigendecompose handles closed-form spectra") {
  SUBCASE("identity") {
    GrowthPanel g = random_rescaled_panel(5, 400, 3);
    CorrMatrix c = corr_matrix(g, 0, 8);
    c.entries = Eigen::MatrixXd::Identity(5, 5);
    const SpectrumReport rep = eigendecompose(c, 5.0 / 400.0);
    for (int k = 0; k < 5; ++k)
      CHECK(rep.eigenvalues[k] == doctest::Approx(1.0).epsilon(1e-12));
  }
  SUBCASE("rank-one update: I + 8uu' on 4 nodes") {
    CorrMatrix c;
    c.n = 4;
    c.tau = 0;
    const Eigen::VectorXd u = Eigen::VectorXd::Constant(4, 0.5);
    c.entries = Eigen::MatrixXd::Identity(4, 4) + 8.0 * u * u.transpose();
    c.overlap = Eigen::MatrixXi::Constant(4, 4, 100);
    const SpectrumReport rep = eigendecompose(c, 0.1);
    CHECK(rep.eigenvalues[3] == doctest::Approx(9.0).epsilon(1e-10));
    for (int k = 0; k < 3; ++k)
      CHECK(rep.eigenvalues[k] == doctest::Approx(1.0).epsilon(1e-10));
  }
  SUBCASE("2x2 closed form") {
    CorrMatrix c;
    c.n = 2;
    c.tau = 0;
    c.entries.setZero(2, 2);
    c.entries << 1.0, 0.3, 0.3, 1.0;
    c.overlap = Eigen::MatrixXi::Constant(2, 2, 50);
    const SpectrumReport rep = eigendecompose(c, 0.05);
    CHECK(rep.eigenvalues[0] == doctest::Approx(0.7).epsilon(1e-12));
    CHECK(rep.eigenvalues[1] == doctest::Approx(1.3).epsilon(1e-12));
  }
}

TEST_CASE("eigendecompose rejects lagged matrices and returns orthonormal vectors") {
  const GrowthPanel g = random_rescaled_panel(6, 50, 5);
  CorrMatrix lagged = corr_matrix(g, 1, 8);
  CHECK_THROWS_AS(eigendecompose(lagged, 0.1), ContractError);

  const CorrMatrix c = corr_matrix(g, 0, 8);
  const SpectrumReport rep = eigendecompose(c, 6.0 / 50.0);
  const Eigen::MatrixXd gram =
      rep.eigenvectors.transpose() * rep.eigenvectors;
  CHECK((gram - Eigen::MatrixXd::Identity(6, 6)).norm() < 1e-8);
  for (int k = 1; k < 6; ++k) CHECK(rep.eigenvalues[k] >= rep.eigenvalues[k - 1]);
}

TEST_CASE("Marchenko-Pastur edges") {
  SUBCASE("q = 0 limit") {
    const auto [lo, hi] = mp_edges(0.0);
    CHECK(lo == 1.0);
    CHECK(hi == 1.0);
  }
  SUBCASE("q = 0.25") {
    const auto [lo, hi] = mp_edges(0.25);
    CHECK(lo == doctest::Approx(0.25).epsilon(1e-12));
    CHECK(hi == doctest::Approx(2.25).epsilon(1e-12));
  }
  SUBCASE("q = 1") {
    const auto [lo, hi] = mp_edges(1.0);
    CHECK(lo == doctest::Approx(0.0));
    CHECK(hi == doctest::Approx(4.0).epsilon(1e-12));
  }
  SUBCASE("negative q rejected") { CHECK_THROWS_AS(mp_edges(-0.1), DomainError); }
}

TEST_CASE("Marchenko-Pastur CDF is a proper distribution") {
  const double q = 0.25;
  const auto [lo, hi] = mp_edges(q);
  CHECK(mp_cdf(q, lo) == doctest::Approx(0.0).epsilon(1e-9));
  CHECK(mp_cdf(q, hi) == doctest::Approx(1.0).epsilon(1e-6));
  double prev = 0.0;
  for (double x = lo; x <= hi; x += (hi - lo) / 32.0) {
    const double f = mp_cdf(q, x);
    CHECK(f >= prev - 1e-12);
    prev = f;
  }
  // Mean of the MP law is 1: integrate x dF numerically.
  double mean = 0.0;
  const int steps = 2000;
  for (int k = 0; k < steps; ++k) {
    const double a = lo + (hi - lo) * k / steps;
    const double b = lo + (hi - lo) * (k + 1) / steps;
    mean += 0.5 * (a + b) * (mp_cdf(q, b) - mp_cdf(q, a));
  }
  CHECK(mean == doctest::Approx(1.0).epsilon(1e-3));
}

TEST_CASE("surrogates preserve the mask and respect the seed contract") {
  Rng rng(41);
  std::vector<std::vector<double>> rows(8, std::vector<double>(60));
  for (auto& row : rows)
    for (auto& v : row) v = rng.normal();
  // One firm observed only 10 quarters.
  for (int t = 10; t < 60; ++t) rows[3][static_cast<std::size_t>(t)] = kNaN;
  const GrowthPanel g = rescale_loo(make_panel(rows));

  const auto s1 = surrogate_spectrum(g, 2, 99, SurrogateSource::Empirical, 4);
  const auto s2 = surrogate_spectrum(g, 2, 99, SurrogateSource::Empirical, 4);
  const auto s3 = surrogate_spectrum(g, 2, 100, SurrogateSource::Empirical, 4);
  REQUIRE(s1.size() == 2);
  CHECK(s1[0] == s2[0]);
  CHECK(s1[1] == s2[1]);
  CHECK(s1[0] != s3[0]);

  // The overlap pattern of a surrogate equals the original by construction:
  // rebuild one surrogate panel through the public path and compare overlaps.
  const CorrMatrix c_orig = corr_matrix(g, 0, 4);
  GrowthPanel surr = g;
  Rng redraw(7);
  for (Eigen::Index i = 0; i < g.n(); ++i)
    for (Eigen::Index t = 0; t < g.t(); ++t)
      if (g.mask(i, t)) surr.values(i, t) = redraw.normal();
  const CorrMatrix c_surr = corr_matrix(rescale_loo(surr), 0, 4);
  CHECK(c_surr.overlap == c_orig.overlap);
}

TEST_CASE("surrogate spectra of pure noise stay inside the widened MP bulk") {
  const GrowthPanel g = random_rescaled_panel(100, 400, 77);
  const auto spectra = surrogate_spectrum(g, 10, 5, SurrogateSource::Gaussian, 8);
  const auto [lo, hi] = mp_edges(100.0 / 400.0);
  long inside = 0;
  long total = 0;
  for (const auto& s : spectra) {
    for (Eigen::Index k = 0; k < s.size(); ++k) {
      ++total;
      if (s[k] >= lo - 0.1 && s[k] <= hi + 0.1) ++inside;
    }
  }
  CHECK(static_cast<double>(inside) / static_cast<double>(total) >= 0.99);
}

TEST_CASE("extract_mode projections") {
  SUBCASE("equal rows project to sqrt(N) times the series") {
    Rng rng(51);
    std::vector<double> w(30);
    for (auto& v : w) v = rng.normal();
    const GrowthPanel g = make_panel({w, w, w, w}, true);
    const Eigen::VectorXd u = Eigen::VectorXd::Constant(4, 0.5);
    const Series v = extract_mode(g, u);
    for (Eigen::Index t = 0; t < 30; ++t)
      CHECK(v.values[t] ==
            doctest::Approx(2.0 * w[static_cast<std::size_t>(t)]).epsilon(1e-12));
  }
  SUBCASE("canonical vector picks out one row") {
    const GrowthPanel g = random_rescaled_panel(5, 40, 52);
    Eigen::VectorXd u = Eigen::VectorXd::Zero(5);
    u[0] = 1.0;
    const Series v = extract_mode(g, u);
    for (Eigen::Index t = 0; t < 40; ++t)
      CHECK(v.values[t] == doctest::Approx(g.values(0, t)).epsilon(1e-12));
  }
  SUBCASE("zero vector is rejected") {
    const GrowthPanel g = random_rescaled_panel(5, 40, 53);
    CHECK_THROWS_AS(extract_mode(g, Eigen::VectorXd::Zero(5)), DomainError);
  }
  SUBCASE("recovers a strong common mode") {
    FactorModelSpec spec;
    spec.n = 200;
    spec.t = 400;
    spec.sigma = 4.0;
    const FactorPanel fp = gen_factor_panel(spec, 1234);
    const Eigen::VectorXd u =
        Eigen::VectorXd::Constant(200, 1.0 / std::sqrt(200.0));
    const Series v = extract_mode(fp.panel, u);
    CHECK(std::abs(pearson(v.values, fp.true_mode.values)) > 0.95);
  }
}

TEST_CASE("remove_mode annihilates and is idempotent on full panels") {
  const GrowthPanel g = random_rescaled_panel(10, 80, 61);
  Eigen::VectorXd u(10);
  Rng rng(62);
  for (int i = 0; i < 10; ++i) u[i] = rng.normal();
  u.normalize();

  const GrowthPanel once = remove_mode(g, u);
  const Series after = extract_mode(once, u);
  for (Eigen::Index t = 0; t < 80; ++t)
    CHECK(std::abs(after.values[t]) < 1e-9);

  const GrowthPanel twice = remove_mode(once, u);
  for (Eigen::Index i = 0; i < 10; ++i)
    for (Eigen::Index t = 0; t < 80; ++t)
      CHECK(twice.values(i, t) == doctest::Approx(once.values(i, t)).epsilon(1e-12));
}

TEST_CASE("mode removal obeys Pythagoras on full panels") {
  const GrowthPanel g = random_rescaled_panel(10, 80, 63);
  Eigen::VectorXd u(10);
  Rng rng(64);
  for (int i = 0; i < 10; ++i) u[i] = rng.normal();
  u.normalize();

  const Series v = extract_mode(g, u);
  const GrowthPanel y = remove_mode(g, u);
  double norm_y = 0.0;
  double norm_g = 0.0;
  for (Eigen::Index i = 0; i < 10; ++i)
    for (Eigen::Index t = 0; t < 80; ++t) {
      norm_y += y.values(i, t) * y.values(i, t);
      norm_g += g.values(i, t) * g.values(i, t);
    }
  const double proj = v.values.squaredNorm();
  CHECK(norm_y + proj == doctest::Approx(norm_g).epsilon(1e-8));
}

TEST_CASE("removing the common mode kills the average correlation") {
  FactorModelSpec spec;
  spec.n = 100;
  spec.t = 400;
  spec.sigma = 4.0;
  const FactorPanel fp = gen_factor_panel(spec, 2024);
  const GrowthPanel g = rescale_loo(fp.panel);
  const Eigen::VectorXd u =
      Eigen::VectorXd::Constant(100, 1.0 / std::sqrt(100.0));
  const GrowthPanel cleaned = rescale_loo(remove_mode(g, u));
  const CorrMatrix c = corr_matrix(cleaned, 0, 8);
  double sum = 0.0;
  long cnt = 0;
  for (int i = 0; i < 100; ++i)
    for (int j = i + 1; j < 100; ++j) {
      sum += c.entries(i, j);
      ++cnt;
    }
  CHECK(std::abs(sum / static_cast<double>(cnt)) < 2.0 / std::sqrt(400.0));
}

TEST_CASE("clean_market_mode flags panels without an outlier") {
  const GrowthPanel g = random_rescaled_panel(60, 300, 71);
  CleanOptions opts;
  opts.n_surrogates = 5;
  opts.seed = 71;
  const CleanResult res = clean_market_mode(g, opts);
  CHECK(res.reports[0].top_mode_in_bulk);
  CHECK(res.reports[0].benchmark == "surrogate");
}

TEST_CASE("clean_market_mode recovers a sine common mode") {
  FactorModelSpec spec;
  spec.n = 80;
  spec.t = 240;
  spec.mode = CommonModeKind::Sine;
  spec.sine_freq = 0.05;
  spec.sine_phase = 0.4;
  spec.sigma = sigma_for_top_eigenvalue(80, 16.0);
  const FactorPanel fp = gen_factor_panel(spec, 99);
  const GrowthPanel g = rescale_loo(fp.panel);

  CleanOptions opts;
  opts.n_surrogates = 5;
  opts.seed = 7;
  const CleanResult res = clean_market_mode(g, opts);
  CHECK_FALSE(res.reports[0].top_mode_in_bulk);
  CHECK(std::abs(pearson(res.modes[0].values, fp.true_mode.values)) > 0.9);
}

TEST_CASE("clean_market_mode recovers mixed-sign loadings") {
  Rng rng(404);
  Eigen::VectorXd u(120);
  for (int i = 0; i < 120; ++i) u[i] = rng.normal();
  u.normalize();

  FactorModelSpec spec;
  spec.n = 120;
  spec.t = 480;
  spec.sigma = 5.0;
  spec.loadings = u;
  const FactorPanel fp = gen_factor_panel(spec, 405);
  const GrowthPanel g = rescale_loo(fp.panel);

  const CleanResult res = clean_market_mode(g, {});
  const Eigen::VectorXd uhat =
      res.reports[0].eigenvectors.col(res.reports[0].eigenvectors.cols() - 1);
  CHECK(std::abs(uhat.dot(u)) > 0.9);
}

TEST_CASE("sector_clean behaviors") {
  SUBCASE("identical rows collapse to zero residual") {
    std::vector<double> w{1.0, -1.0, 0.5, -0.5, 1.5, -1.5};
    // Mean-zero rows so this mirrors a rescaled panel.
    const GrowthPanel g = make_panel({w, w}, true);
    const SectorCleanResult res = sector_clean(g, {"s", "s"});
    CHECK(res.loadings[0] == doctest::Approx(1.0).epsilon(1e-12));
    for (Eigen::Index t = 0; t < g.t(); ++t) {
      CHECK(std::abs(res.panel.values(0, t)) < 1e-12);
      CHECK(std::abs(res.panel.values(1, t)) < 1e-12);
    }
  }
  SUBCASE("uncorrelated firm is nearly unchanged") {
    Rng rng(81);
    std::vector<std::vector<double>> rows(3, std::vector<double>(200));
    for (auto& row : rows)
      for (auto& v : row) v = rng.normal();
    const GrowthPanel g = rescale_loo(make_panel(rows));
    const SectorCleanResult res = sector_clean(g, {"s", "s", "s"});
    // khat for i against the sum including itself is small but nonzero;
    // check the residual stays close to the input.
    for (Eigen::Index t = 0; t < g.t(); ++t)
      CHECK(res.panel.values(2, t) ==
            doctest::Approx(g.values(2, t)).epsilon(0.75));
  }
  SUBCASE("singleton sector is returned unchanged with a warning") {
    const GrowthPanel g =
        make_panel({{1.0, -1.0, 1.0, -1.0}, {0.4, -0.4, 0.2, -0.2}}, true);
    const SectorCleanResult res = sector_clean(g, {"a", "b"});
    CHECK(res.unchanged_firms.size() == 2);
    for (Eigen::Index t = 0; t < g.t(); ++t)
      CHECK(res.panel.values(0, t) == g.values(0, t));
  }
}

TEST_CASE("symmetrised lagged correlation") {
  SUBCASE("white noise stays small") {
    // Few pairs: each combined entry has standard error ~1.22/sqrt(T), so
    // the 3/sqrt(T) noise-level bound only holds entrywise for a handful of
    // pairs at a fixed seed.
    const GrowthPanel g = random_rescaled_panel(6, 400, 91);
    const CorrMatrix c = sym_lag_corr(g, 8);
    for (int i = 0; i < 6; ++i)
      for (int j = i + 1; j < 6; ++j)
        CHECK(std::abs(c.entries(i, j)) < 3.0 / std::sqrt(400.0));
  }
  SUBCASE("a one-step shift contributes half") {
    Rng rng(92);
    std::vector<double> base(400);
    for (auto& v : base) v = rng.normal();
    std::vector<double> shifted(400);
    shifted[0] = rng.normal();
    for (int t = 1; t < 400; ++t)
      shifted[static_cast<std::size_t>(t)] = base[static_cast<std::size_t>(t - 1)];
    const GrowthPanel g = rescale_loo(make_panel({base, shifted}));
    const CorrMatrix c = sym_lag_corr(g, 8);
    CHECK(c.entries(0, 1) == doctest::Approx(0.5).epsilon(0.05));
  }
  SUBCASE("output is symmetric") {
    const GrowthPanel g = random_rescaled_panel(10, 100, 93);
    const CorrMatrix c = sym_lag_corr(g, 8);
    CHECK((c.entries - c.entries.transpose()).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("spike overlap decays as the common mode weakens") {
  const int n = 200;
  const int t = 800;
  const double q = static_cast<double>(n) / t;

  Rng lrng(314);
  Eigen::VectorXd u(n);
  for (int i = 0; i < n; ++i) u[i] = lrng.normal();
  u.normalize();

  const double sigma_hi = 4.0 * std::sqrt(q);
  const double sigma_lo = 0.25 * std::pow(q, 0.25);
  const int n_sigma = 6;
  std::vector<double> overlaps;
  for (int k = 0; k < n_sigma; ++k) {
    const double frac = static_cast<double>(k) / (n_sigma - 1);
    const double sigma = sigma_hi * std::pow(sigma_lo / sigma_hi, frac);
    double acc = 0.0;
    for (uint64_t seed = 0; seed < 5; ++seed) {
      FactorModelSpec spec;
      spec.n = n;
      spec.t = t;
      spec.sigma = sigma;
      spec.loadings = u;
      const FactorPanel fp = gen_factor_panel(spec, 1000 + seed * 17 + static_cast<uint64_t>(k));
      const GrowthPanel g = rescale_loo(fp.panel);
      const CorrMatrix c = corr_matrix(g, 0, 8);
      const SpectrumReport rep = eigendecompose(c, q);
      const Eigen::VectorXd uhat =
          rep.eigenvectors.col(rep.eigenvectors.cols() - 1);
      acc += std::abs(uhat.dot(u));
    }
    overlaps.push_back(acc / 5.0);
  }
  for (std::size_t k = 1; k < overlaps.size(); ++k)
    CHECK(overlaps[k] <= overlaps[k - 1] + 0.07);
  CHECK(overlaps.back() < 3.0 / std::sqrt(static_cast<double>(n)));
}
