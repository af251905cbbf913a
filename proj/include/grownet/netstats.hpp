#pragma once

#include "grownet/common.hpp"
#include "grownet/spectral.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace grownet {

// Undirected simple graph on labeled nodes. Edges are stored as (i, j) with
// i < j, sorted and unique.
struct Network {
  int n = 0;
  std::vector<std::string> node_ids;
  std::vector<std::pair<int, int>> edges;

  long long m() const { return static_cast<long long>(edges.size()); }
  std::vector<std::vector<int>> adjacency() const;
};

// Normalizes edges (orders endpoints, sorts, deduplicates, drops self-loops)
// and validates indices. Default node ids are "0".."n-1".
Network make_network(int n, std::vector<std::pair<int, int>> edges,
                     std::vector<std::string> node_ids = {});

// `src,dst` CSV. Direction is discarded; duplicates and self-loops dropped.
// When `universe` is given it fixes the node set and ordering; ids outside
// it are an error. Otherwise nodes are the ids seen, sorted.
Network load_edgelist_csv(const std::filesystem::path& path,
                          const std::vector<std::string>& universe = {});
void write_edgelist_csv(const Network& net, const std::filesystem::path& path);

struct NetSummary {
  int n = 0;
  long long m = 0;
  double density_unordered = 0.0;  // m / (n(n-1)/2)
  double density_ordered = 0.0;    // m / (n(n-1)); the Table-1 convention
  int median_degree = 0;           // lower median
  int max_degree = 0;
};

NetSummary summary(const Network& net);

// p = sum_{i<j} A_ij / (N(N-1)).
double er_density(const Network& net);

Network generate_er(int n, double p, uint64_t seed);

struct BlockScheme {
  std::vector<int> partition;  // per-node block index in [0, B)
  Eigen::MatrixXd densities;   // B x B symmetric
  std::vector<std::string> block_names;
};

BlockScheme make_block_scheme(std::vector<int> partition, Eigen::MatrixXd densities,
                              std::vector<std::string> block_names = {});

Network generate_sbm(const BlockScheme& scheme, uint64_t seed);

// Empirical within/across block densities. Diagonal uses unordered pairs
// within the block (0 for singleton blocks), off-diagonal the full
// cross-pair count, so generate_sbm(block_densities(net)) matches net in
// expectation.
Eigen::MatrixXd block_densities(const Network& net, const std::vector<int>& partition);

// Stub matching with double-edge-swap repair of self-loops and multi-edges,
// then 10*m mixing swaps. The output degree sequence equals the input
// exactly; non-graphical sequences are a domain error.
Network generate_config_model(const std::vector<int>& degrees, uint64_t seed);

// S^(k): unordered pairs at shortest-path distance exactly k, k = 1..k_max.
// Disconnected pairs appear in no class.
std::vector<std::vector<std::pair<int, int>>> distance_classes(const Network& net,
                                                               int k_max);
std::vector<std::vector<std::pair<int, int>>> distance_classes_serial(
    const Network& net, int k_max);

// Dense combinatorial Laplacian D - A.
Eigen::MatrixXd laplacian(const Network& net);

struct AvgCorr {
  double value = 0.0;
  long long pairs_used = 0;
  long long pairs_excluded = 0;  // zero-overlap pairs left out of the mean
};

// Mean correlation over the network's edges.
AvgCorr avg_corr_on_network(const CorrMatrix& c, const Network& net);

struct ErModel {
  int n;
  double p;
};
struct SbmModel {
  BlockScheme scheme;
};
struct ConfigModel {
  std::vector<int> degrees;
};
using BenchmarkModel = std::variant<ErModel, SbmModel, ConfigModel>;

struct BenchStats {
  double mean = 0.0;
  double stdev = 0.0;
  int draws_used = 0;
};

// Mean and sample standard deviation of avg_corr_on_network over n_draws
// random networks; draw d uses derive_seed(seed, d). Edgeless draws are
// skipped (all-edgeless is an error).
BenchStats benchmark_avg_corr(const CorrMatrix& c, const BenchmarkModel& model,
                              int n_draws, uint64_t seed);

// D(k) = mean correlation over S^(k); empty classes give nullopt.
std::vector<std::optional<double>> distance_decay(const CorrMatrix& c,
                                                  const Network& net, int k_max);

}  // namespace grownet
