#pragma once

#include "grownet/common.hpp"
#include "grownet/netstats.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <string>

namespace grownet {

// Pair-level counts over the n(n-1)/2 unordered node pairs; an edge is the
// positive class.
struct ConfusionCounts {
  long long tp = 0;
  long long fp = 0;
  long long tn = 0;
  long long fn = 0;

  long long total() const { return tp + fp + tn + fn; }
};

ConfusionCounts confusion(const Network& truth, const Network& pred);

// Undefined metrics (zero denominator) are nullopt, never NaN.
struct Metrics {
  std::optional<double> tpr;
  std::optional<double> accuracy;
  std::optional<double> f1;
};

Metrics metrics(const ConfusionCounts& c);

struct BenchmarkSide {
  std::map<std::string, double> mean;    // per metric, over defined draws
  std::map<std::string, double> stdev;   // sample std
  std::map<std::string, bool> exceeded;  // pred > mean + 2*std
  int draws = 0;
};

struct ComparisonReport {
  Metrics predicted;
  BenchmarkSide er;   // density-matched ER draws
  BenchmarkSide sbm;  // block-density-matched SBM draws
};

// Compares the prediction against density-matched ER and sector-SBM random
// benchmarks (n_draws each; draw d of model M uses derive_seed(seed, M:d)).
ComparisonReport benchmark_comparison(const Network& truth, const Network& pred,
                                      const std::vector<int>& partition,
                                      int n_draws = 50, uint64_t seed = 0);

}  // namespace grownet
