#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "grownet/evalx.hpp"
#include "grownet/pipeline.hpp"
#include "grownet/rng.hpp"
#include "grownet/spectral.hpp"
#include "grownet/synth.hpp"

#include <algorithm>
#include <cmath>

using namespace grownet;

namespace {

// Two-sector planted world shared by the reconstruction tests.
struct TwoSectorWorld {
  Network truth;
  CorrMatrix corr;
  ReconstructionPlan plan;
  std::vector<int> partition_idx;
};

TwoSectorWorld make_two_sector_world(uint64_t seed) {
  TwoSectorWorld w;
  const int na = 35;
  const int nb = 35;
  std::vector<int> partition(na, 0);
  partition.insert(partition.end(), nb, 1);
  Eigen::MatrixXd dens(2, 2);
  dens << 0.12, 0.03, 0.03, 0.12;
  w.truth = generate_sbm(make_block_scheme(partition, dens), derive_seed(seed, "net"));
  const PlantedInstance inst =
      gen_gmrf_panel(w.truth, 3000, 0.5, 0.0, derive_seed(seed, "panel"));
  w.corr = corr_matrix(rescale_loo(inst.panel), 0, 8);
  w.partition_idx = partition;

  const Eigen::MatrixXd rho = block_densities(w.truth, partition);
  for (int i = 0; i < na; ++i) w.plan.partition.push_back("alpha");
  for (int i = 0; i < nb; ++i) w.plan.partition.push_back("beta");
  w.plan.target_density_diag["alpha"] = rho(0, 0);
  w.plan.target_density_diag["beta"] = rho(1, 1);
  w.plan.target_density_offdiag[{"alpha", "beta"}] = rho(0, 1);
  w.plan.spectra_samples = 200;
  w.plan.solver.beta = 5.0;
  w.plan.solver.max_iter = 1200;
  w.plan.solver.tol = 1e-5;
  w.plan.seed = derive_seed(seed, "plan");
  return w;
}

}  // namespace

TEST_CASE("spectral_target_er closed forms") {
  SUBCASE("p = 1 gives the complete-graph spectrum exactly") {
    const SpectralTarget t = spectral_target_er(6, 1.0, 3, 1);
    REQUIRE(t.lambdas.size() == 5);
    for (int k = 0; k < 5; ++k)
      CHECK(t.lambdas[k] == doctest::Approx(6.0).epsilon(1e-12));
  }
  SUBCASE("p = 0 clamps to the floor") {
    const SpectralTarget t = spectral_target_er(6, 0.0, 3, 1);
    for (int k = 0; k < 5; ++k) CHECK(t.lambdas[k] == 1e-9);
  }
  SUBCASE("ascending and positive") {
    const SpectralTarget t = spectral_target_er(40, 0.15, 200, 5);
    CHECK(t.lambdas[0] > 0.0);
    for (int k = 1; k < t.lambdas.size(); ++k)
      CHECK(t.lambdas[k] >= t.lambdas[k - 1]);
  }
  SUBCASE("Monte-Carlo concentration across seeds") {
    const SpectralTarget a = spectral_target_er(50, 0.1, 1000, 11);
    const SpectralTarget b = spectral_target_er(50, 0.1, 1000, 22);
    CHECK((a.lambdas - b.lambdas).cwiseAbs().maxCoeff() < 0.05);
  }
  SUBCASE("deterministic per seed") {
    const SpectralTarget a = spectral_target_er(30, 0.2, 50, 7);
    const SpectralTarget b = spectral_target_er(30, 0.2, 50, 7);
    CHECK(a.lambdas == b.lambdas);
  }
}

TEST_CASE("spectral_target_block") {
  SUBCASE("a single block reduces to the ER target exactly") {
    Eigen::MatrixXd dens(1, 1);
    dens << 0.15;
    const SpectralTarget blk = spectral_target_block({25}, dens, 100, 9);
    const SpectralTarget er = spectral_target_er(25, 0.15, 100, 9);
    CHECK(blk.lambdas == er.lambdas);
  }
  SUBCASE("disconnected blocks leave a near-zero second eigenvalue") {
    Eigen::MatrixXd dens(2, 2);
    dens << 0.5, 0.0, 0.0, 0.5;
    const SpectralTarget t = spectral_target_block({15, 15}, dens, 100, 10);
    // After dropping the exact zero, the next eigenvalue (the second
    // component's zero) survives only as the clamp floor.
    CHECK(t.lambdas[0] < 1e-6);
    CHECK(t.lambdas[t.lambdas.size() - 1] > 1.0);
  }
}

TEST_CASE("calibrate_alpha hits a matching goal immediately") {
  const Network truth = generate_er(30, 0.15, 71);
  const PlantedInstance inst = gen_gmrf_panel(truth, 2000, 0.5, 0.0, 72);
  const CorrMatrix c = corr_matrix(rescale_loo(inst.panel), 0, 8);
  const SpectralTarget target = spectral_target_er(30, 0.15, 200, 73);
  SolverConfig cfg;
  cfg.beta = 5.0;
  cfg.max_iter = 800;
  cfg.tol = 1e-5;

  // Find the alpha = 0 density, then ask for exactly it.
  const SolveResult probe = solve_sgl(c.entries, target, cfg, 0);
  long cnt = 0;
  for (Eigen::Index k = 0; k < probe.w.w.size(); ++k)
    if (probe.w.w[k] > 1e-8) ++cnt;
  const double d0 = static_cast<double>(cnt) / (30.0 * 29.0 / 2.0);

  const CalibrationResult cal = calibrate_alpha(c.entries, target, d0, cfg, 0);
  CHECK(cal.alpha == 0.0);
  CHECK(cal.probes.size() == 1);
  CHECK(cal.density_achieved == doctest::Approx(d0));
}

TEST_CASE("calibrate_alpha lands inside the density band on a planted instance") {
  const Network truth = generate_er(40, 0.1, 81);
  const PlantedInstance inst = gen_gmrf_panel(truth, 4000, 0.5, 0.0, 82);
  const CorrMatrix c = corr_matrix(rescale_loo(inst.panel), 0, 8);
  const SpectralTarget target = spectral_target_er(40, 0.1, 300, 83);
  SolverConfig cfg;
  cfg.beta = 5.0;
  cfg.max_iter = 1200;
  cfg.tol = 1e-5;

  const CalibrationResult cal = calibrate_alpha(c.entries, target, 0.1, cfg, 0);
  CHECK(cal.density_achieved >= 0.09);
  CHECK(cal.density_achieved <= 0.11);
  CHECK(static_cast<int>(cal.probes.size()) <= 20);
}

TEST_CASE("an unreachable density goal fails loudly or falls back flagged") {
  const Network truth = generate_er(20, 0.15, 91);
  const PlantedInstance inst = gen_gmrf_panel(truth, 1000, 0.5, 0.0, 92);
  const CorrMatrix c = corr_matrix(rescale_loo(inst.panel), 0, 8);
  const SpectralTarget target = spectral_target_er(20, 0.15, 100, 93);
  SolverConfig cfg;
  cfg.beta = 5.0;
  cfg.max_iter = 400;
  cfg.tol = 1e-5;

  try {
    const CalibrationResult cal =
        calibrate_alpha(c.entries, target, 0.999, cfg, 0);
    CHECK(cal.quantile_fallback);
  } catch (const CalibrationError& e) {
    CHECK(!e.probes().empty());
  }
}

TEST_CASE("single-sector reconstruction reduces to whole-matrix calibration") {
  const Network truth = generate_er(30, 0.12, 55);
  const PlantedInstance inst = gen_gmrf_panel(truth, 2500, 0.5, 0.0, 56);
  const CorrMatrix c = corr_matrix(rescale_loo(inst.panel), 0, 8);

  ReconstructionPlan plan;
  plan.partition.assign(30, "only");
  plan.target_density_diag["only"] = 0.12;
  plan.spectra_samples = 150;
  plan.solver.beta = 5.0;
  plan.solver.max_iter = 800;
  plan.solver.tol = 1e-5;
  plan.seed = 99;

  const ReconstructionResult res = reconstruct_network(c, plan);

  const SpectralTarget target = spectral_target_er(
      30, 0.12, 150, derive_seed(plan.seed, "target-diag-only"));
  const CalibrationResult cal =
      calibrate_alpha(c.entries, target, 0.12, plan.solver,
                      derive_seed(plan.seed, "cal-diag-only"));
  CHECK(res.net.edges == cal.net.edges);
  REQUIRE(res.report.diagonal.size() == 1);
  CHECK(res.report.offdiagonal.empty());
  CHECK(res.report.diagonal[0].alpha == cal.alpha);
}

TEST_CASE("two-sector reconstruction") {
  const TwoSectorWorld w = make_two_sector_world(7001);
  const ReconstructionResult res = reconstruct_network(w.corr, w.plan);

  SUBCASE("diagonal blocks are bit-identical to their stage-1 solves") {
    for (const auto& label : {std::string("alpha"), std::string("beta")}) {
      const int offset = label == "alpha" ? 0 : 35;
      Eigen::MatrixXd sub(35, 35);
      for (int r = 0; r < 35; ++r)
        for (int cc = 0; cc < 35; ++cc)
          sub(r, cc) = w.corr.entries(offset + r, offset + cc);
      const SpectralTarget target = spectral_target_er(
          35, w.plan.target_density_diag.at(label), w.plan.spectra_samples,
          derive_seed(w.plan.seed, "target-diag-" + label));
      const CalibrationResult cal =
          calibrate_alpha(sub, target, w.plan.target_density_diag.at(label),
                          w.plan.solver, derive_seed(w.plan.seed, "cal-diag-" + label));
      std::vector<std::pair<int, int>> expected;
      for (const auto& [u, v] : cal.net.edges)
        expected.emplace_back(u + offset, v + offset);
      std::vector<std::pair<int, int>> got;
      for (const auto& [u, v] : res.net.edges)
        if ((u >= offset && u < offset + 35) && (v >= offset && v < offset + 35))
          got.emplace_back(u, v);
      CHECK(got == expected);
    }
  }

  SUBCASE("report carries both stages") {
    REQUIRE(res.report.diagonal.size() == 2);
    REQUIRE(res.report.offdiagonal.size() == 1);
    CHECK(res.report.offdiagonal[0].block_a == "alpha");
    CHECK(res.report.offdiagonal[0].block_b == "beta");
    for (const auto& rep : res.report.diagonal)
      CHECK(rep.density_achieved ==
            doctest::Approx(rep.density_goal).epsilon(0.11));
  }

  SUBCASE("assembled density is within 15% of the plan's implied total") {
    const double implied = w.plan.target_density_diag.at("alpha") * (35.0 * 34 / 2) +
                           w.plan.target_density_diag.at("beta") * (35.0 * 34 / 2) +
                           w.plan.target_density_offdiag.at({"alpha", "beta"}) * 35.0 * 35.0;
    CHECK(std::abs(static_cast<double>(res.net.m()) - implied) / implied < 0.15);
  }

  SUBCASE("deterministic end to end") {
    const ReconstructionResult again = reconstruct_network(w.corr, w.plan);
    CHECK(again.net.edges == res.net.edges);
    REQUIRE(again.report.diagonal.size() == res.report.diagonal.size());
    for (std::size_t b = 0; b < res.report.diagonal.size(); ++b)
      CHECK(again.report.diagonal[b].alpha == res.report.diagonal[b].alpha);
  }

  SUBCASE("recovered network beats chance") {
    const Metrics m = metrics(confusion(w.truth, res.net));
    REQUIRE(m.f1.has_value());
    const double density =
        static_cast<double>(w.truth.m()) / (70.0 * 69.0 / 2.0);
    CHECK(*m.f1 > density + 0.2);
  }
}

TEST_CASE("block-diagonal correlation yields no spurious dense coupling") {
  TwoSectorWorld w = make_two_sector_world(7002);
  // Erase every cross-sector correlation.
  for (int i = 0; i < 35; ++i)
    for (int j = 35; j < 70; ++j) {
      w.corr.entries(i, j) = 0.0;
      w.corr.entries(j, i) = 0.0;
    }
  const ReconstructionResult res = reconstruct_network(w.corr, w.plan);
  long cross = 0;
  for (const auto& [u, v] : res.net.edges)
    if (u < 35 && v >= 35) ++cross;
  const double goal = w.plan.target_density_offdiag.at({"alpha", "beta"});
  CHECK(cross <= static_cast<long>(std::ceil(1.1 * goal * 35.0 * 35.0)) + 1);
}

TEST_CASE("reconstruction is equivariant under firm permutation") {
  const TwoSectorWorld w = make_two_sector_world(7003);
  const ReconstructionResult base = reconstruct_network(w.corr, w.plan);

  // Reverse the firm order (keeps each index inside its sector's new span).
  const int n = 70;
  std::vector<int> perm(n);
  for (int i = 0; i < n; ++i) perm[static_cast<std::size_t>(i)] = n - 1 - i;

  CorrMatrix cp = w.corr;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      cp.entries(perm[static_cast<std::size_t>(i)], perm[static_cast<std::size_t>(j)]) =
          w.corr.entries(i, j);
  ReconstructionPlan pp = w.plan;
  for (int i = 0; i < n; ++i)
    pp.partition[static_cast<std::size_t>(perm[static_cast<std::size_t>(i)])] =
        w.plan.partition[static_cast<std::size_t>(i)];

  const ReconstructionResult moved = reconstruct_network(cp, pp);
  std::vector<std::pair<int, int>> expected;
  for (const auto& [u, v] : base.net.edges) {
    const int pu = perm[static_cast<std::size_t>(u)];
    const int pv = perm[static_cast<std::size_t>(v)];
    expected.emplace_back(std::min(pu, pv), std::max(pu, pv));
  }
  std::sort(expected.begin(), expected.end());
  CHECK(moved.net.edges == expected);
}

TEST_CASE("a failing block yields a partial result carrying the rest") {
  const TwoSectorWorld w = make_two_sector_world(7004);
  ReconstructionPlan plan = w.plan;
  plan.partition[0] = "lonely";  // singleton sector cannot be solved
  plan.target_density_diag["lonely"] = 0.1;
  plan.target_density_offdiag[{"alpha", "lonely"}] = 0.02;
  plan.target_density_offdiag[{"beta", "lonely"}] = 0.02;

  try {
    reconstruct_network(w.corr, plan);
    FAIL("expected PartialResultError");
  } catch (const PartialResultError& e) {
    CHECK(e.partial().report.diagonal.size() >= 1);
    CHECK(e.partial().net.n == 70);
  }
}

TEST_CASE("a missing plan density is a data error naming the sector") {
  const TwoSectorWorld w = make_two_sector_world(7005);
  ReconstructionPlan plan = w.plan;
  plan.target_density_offdiag.clear();
  CHECK_THROWS_WITH_AS(reconstruct_network(w.corr, plan),
                       doctest::Contains("alpha"), DataError);
}
