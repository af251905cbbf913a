#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "grownet/evalx.hpp"
#include "grownet/rng.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

using namespace grownet;

namespace {

const Network kTriangle = make_network(3, {{0, 1}, {0, 2}, {1, 2}});

}  // namespace

TEST_CASE("confusion counts") {
  SUBCASE("perfect prediction") {
    const ConfusionCounts c = confusion(kTriangle, kTriangle);
    CHECK(c.tp == 3);
    CHECK(c.fp == 0);
    CHECK(c.fn == 0);
    CHECK(c.tn == 0);
  }
  SUBCASE("complement prediction") {
    const Network truth = make_network(4, {{0, 1}});
    const Network pred = make_network(
        4, {{0, 2}, {0, 3}, {1, 2}, {1, 3}, {2, 3}});
    const ConfusionCounts c = confusion(truth, pred);
    CHECK(c.tp == 0);
    CHECK(c.tn == 0);
    CHECK(c.fp == 5);
    CHECK(c.fn == 1);
  }
  SUBCASE("triangle against one shared edge") {
    const Network pred = make_network(3, {{0, 1}});
    const ConfusionCounts c = confusion(kTriangle, pred);
    CHECK(c.tp == 1);
    CHECK(c.fn == 2);
    CHECK(c.fp == 0);
    CHECK(c.tn == 0);
  }
  SUBCASE("counts always partition the pair universe") {
    Rng rng(3);
    for (int trial = 0; trial < 20; ++trial) {
      const int n = 5 + rng.uniform_int(20);
      const Network a = generate_er(n, 0.3, derive_seed(10, trial));
      const Network b = generate_er(n, 0.3, derive_seed(20, trial));
      const ConfusionCounts c = confusion(a, b);
      CHECK(c.total() == static_cast<long long>(n) * (n - 1) / 2);
    }
  }
  SUBCASE("mismatched node sets are rejected") {
    const Network other = make_network(4, {{0, 1}});
    CHECK_THROWS_AS(confusion(kTriangle, other), ContractError);
  }
}

TEST_CASE("metrics formulas and degenerate denominators") {
  SUBCASE("perfect prediction scores one everywhere") {
    const Metrics m = metrics(confusion(kTriangle, kTriangle));
    CHECK(*m.tpr == 1.0);
    CHECK(*m.accuracy == 1.0);
    CHECK(*m.f1 == 1.0);
  }
  SUBCASE("hand-computed example") {
    const Metrics m = metrics({1, 0, 0, 2});
    CHECK(*m.tpr == doctest::Approx(1.0 / 3.0));
    CHECK(*m.accuracy == doctest::Approx(1.0 / 3.0));
    CHECK(*m.f1 == doctest::Approx(0.5));
  }
  SUBCASE("empty truth and prediction") {
    const Network empty = make_network(4, {});
    const Metrics m = metrics(confusion(empty, empty));
    CHECK_FALSE(m.tpr.has_value());
    CHECK(*m.accuracy == 1.0);
    CHECK_FALSE(m.f1.has_value());
  }
}

TEST_CASE("f1 equals the harmonic mean of precision and recall") {
  Rng rng(9);
  for (int trial = 0; trial < 50; ++trial) {
    const int n = 8 + rng.uniform_int(15);
    const Network truth = generate_er(n, 0.35, derive_seed(5, trial));
    const Network pred = generate_er(n, 0.35, derive_seed(6, trial));
    const ConfusionCounts c = confusion(truth, pred);
    const Metrics m = metrics(c);
    if (!m.f1 || !m.tpr || c.tp + c.fp == 0) continue;
    const double precision =
        static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fp);
    if (precision + *m.tpr == 0.0) continue;
    const double harmonic = 2.0 * precision * *m.tpr / (precision + *m.tpr);
    CHECK(*m.f1 == doctest::Approx(harmonic).epsilon(1e-12));
  }
}

TEST_CASE("metrics are invariant under consistent relabeling") {
  Rng rng(13);
  const int n = 14;
  const Network truth = generate_er(n, 0.3, 100);
  const Network pred = generate_er(n, 0.3, 101);

  std::vector<int> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  for (int k = n - 1; k > 0; --k)
    std::swap(perm[static_cast<std::size_t>(k)],
              perm[static_cast<std::size_t>(rng.uniform_int(k + 1))]);
  const auto relabel = [&](const Network& net) {
    std::vector<std::pair<int, int>> edges;
    for (const auto& [i, j] : net.edges)
      edges.emplace_back(perm[static_cast<std::size_t>(i)],
                         perm[static_cast<std::size_t>(j)]);
    return make_network(n, edges);
  };

  const Metrics a = metrics(confusion(truth, pred));
  const Metrics b = metrics(confusion(relabel(truth), relabel(pred)));
  CHECK(*a.tpr == doctest::Approx(*b.tpr).epsilon(1e-15));
  CHECK(*a.accuracy == doctest::Approx(*b.accuracy).epsilon(1e-15));
  CHECK(*a.f1 == doctest::Approx(*b.f1).epsilon(1e-15));
}

TEST_CASE("benchmark comparison") {
  const int n = 60;
  std::vector<int> partition(static_cast<std::size_t>(n), 0);
  for (int v = n / 2; v < n; ++v) partition[static_cast<std::size_t>(v)] = 1;
  Eigen::MatrixXd dens(2, 2);
  dens << 0.25, 0.04, 0.04, 0.2;
  const Network truth = generate_sbm(make_block_scheme(partition, dens), 7);

  SUBCASE("the truth itself beats both benchmarks") {
    const ComparisonReport rep =
        benchmark_comparison(truth, truth, partition, 50, 11);
    for (const auto& metric : {"tpr", "accuracy", "f1"}) {
      CHECK(rep.er.exceeded.at(metric));
      CHECK(rep.sbm.exceeded.at(metric));
    }
  }
  SUBCASE("a fresh ER draw sits inside the ER benchmark band") {
    int within = 0;
    for (uint64_t s = 0; s < 5; ++s) {
      const double p_match =
          static_cast<double>(truth.m()) /
          (static_cast<double>(n) * static_cast<double>(n - 1) / 2.0);
      Network fresh = generate_er(n, p_match, 900 + s);
      fresh.node_ids = truth.node_ids;
      const ComparisonReport rep =
          benchmark_comparison(truth, fresh, partition, 50, 12 + s);
      bool all_within = true;
      for (const auto& metric : {"tpr", "accuracy", "f1"}) {
        if (!rep.predicted.f1) continue;
        const double pred = metric == std::string("tpr") ? *rep.predicted.tpr
                            : metric == std::string("accuracy")
                                ? *rep.predicted.accuracy
                                : *rep.predicted.f1;
        const double lo =
            rep.er.mean.at(metric) - 3.0 * rep.er.stdev.at(metric);
        const double hi =
            rep.er.mean.at(metric) + 3.0 * rep.er.stdev.at(metric);
        if (pred < lo || pred > hi) all_within = false;
      }
      if (all_within) ++within;
    }
    CHECK(within >= 3);  // 5-seed majority
  }
  SUBCASE("deterministic per seed") {
    const ComparisonReport a =
        benchmark_comparison(truth, truth, partition, 20, 99);
    const ComparisonReport b =
        benchmark_comparison(truth, truth, partition, 20, 99);
    CHECK(a.er.mean == b.er.mean);
    CHECK(a.sbm.stdev == b.sbm.stdev);
  }
}
