#include "grownet/evalx.hpp"

#include "grownet/rng.hpp"

#include <algorithm>
#include <cmath>

namespace grownet {

ConfusionCounts confusion(const Network& truth, const Network& pred) {
  if (truth.n != pred.n || truth.node_ids != pred.node_ids)
    throw ContractError("confusion requires identical node sets");
  ConfusionCounts c;
  // Both edge lists are sorted; count the intersection by merge.
  auto it = truth.edges.begin();
  auto jp = pred.edges.begin();
  while (it != truth.edges.end() && jp != pred.edges.end()) {
    if (*it < *jp) {
      ++it;
    } else if (*jp < *it) {
      ++jp;
    } else {
      ++c.tp;
      ++it;
      ++jp;
    }
  }
  c.fn = truth.m() - c.tp;
  c.fp = pred.m() - c.tp;
  const long long pairs =
      static_cast<long long>(truth.n) * (truth.n - 1) / 2;
  c.tn = pairs - c.tp - c.fn - c.fp;
  return c;
}

Metrics metrics(const ConfusionCounts& c) {
  Metrics m;
  if (c.tp + c.fn > 0)
    m.tpr = static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fn);
  if (c.total() > 0)
    m.accuracy = static_cast<double>(c.tp + c.tn) / static_cast<double>(c.total());
  if (2 * c.tp + c.fp + c.fn > 0)
    m.f1 = 2.0 * static_cast<double>(c.tp) /
           static_cast<double>(2 * c.tp + c.fp + c.fn);
  return m;
}

namespace {

BenchmarkSide summarize_draws(const std::vector<Metrics>& draws,
                              const Metrics& predicted) {
  BenchmarkSide side;
  side.draws = static_cast<int>(draws.size());
  const std::pair<std::string, std::optional<double> Metrics::*> fields[] = {
      {"tpr", &Metrics::tpr},
      {"accuracy", &Metrics::accuracy},
      {"f1", &Metrics::f1},
  };
  for (const auto& [name, field] : fields) {
    double sum = 0.0;
    int n = 0;
    for (const auto& d : draws) {
      const auto& v = d.*field;
      if (v) {
        sum += *v;
        ++n;
      }
    }
    if (n == 0) continue;
    const double mean = sum / n;
    double ss = 0.0;
    for (const auto& d : draws) {
      const auto& v = d.*field;
      if (v) ss += (*v - mean) * (*v - mean);
    }
    const double stdev = n > 1 ? std::sqrt(ss / (n - 1)) : 0.0;
    side.mean[name] = mean;
    side.stdev[name] = stdev;
    const auto& pv = predicted.*field;
    if (pv) side.exceeded[name] = *pv > mean + 2.0 * stdev;
  }
  return side;
}

}  // namespace

ComparisonReport benchmark_comparison(const Network& truth, const Network& pred,
                                      const std::vector<int>& partition,
                                      int n_draws, uint64_t seed) {
  if (static_cast<int>(partition.size()) != truth.n)
    throw ContractError("partition must label every node");
  if (n_draws < 2) throw DomainError("n_draws must be >= 2");

  ComparisonReport report;
  report.predicted = metrics(confusion(truth, pred));

  // Density matched on unordered pairs so expected edge counts agree.
  const double pairs = static_cast<double>(truth.n) *
                       static_cast<double>(truth.n - 1) / 2.0;
  const double p_match = static_cast<double>(truth.m()) / pairs;
  const BlockScheme scheme =
      make_block_scheme(partition, block_densities(truth, partition));

  std::vector<Metrics> er_draws(static_cast<std::size_t>(n_draws));
  std::vector<Metrics> sbm_draws(static_cast<std::size_t>(n_draws));
  const uint64_t er_seed = derive_seed(seed, "benchmark-er");
  const uint64_t sbm_seed = derive_seed(seed, "benchmark-sbm");

#pragma omp parallel for schedule(dynamic)
  for (int d = 0; d < n_draws; ++d) {
    Network er = generate_er(truth.n, p_match, derive_seed(er_seed, static_cast<uint64_t>(d)));
    er.node_ids = truth.node_ids;
    er_draws[static_cast<std::size_t>(d)] = metrics(confusion(truth, er));
    Network sbm = generate_sbm(scheme, derive_seed(sbm_seed, static_cast<uint64_t>(d)));
    sbm.node_ids = truth.node_ids;
    sbm_draws[static_cast<std::size_t>(d)] = metrics(confusion(truth, sbm));
  }

  report.er = summarize_draws(er_draws, report.predicted);
  report.sbm = summarize_draws(sbm_draws, report.predicted);
  return report;
}

}  // namespace grownet
