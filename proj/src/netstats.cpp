#include "grownet/netstats.hpp"

#include "grownet/csv.hpp"
#include "grownet/rng.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <unordered_map>

namespace grownet {

namespace {

inline uint64_t edge_key(int i, int j, int n) {
  return static_cast<uint64_t>(i) * static_cast<uint64_t>(n) +
         static_cast<uint64_t>(j);
}

}  // namespace

std::vector<std::vector<int>> Network::adjacency() const {
  std::vector<std::vector<int>> adj(n);
  for (const auto& [i, j] : edges) {
    adj[i].push_back(j);
    adj[j].push_back(i);
  }
  return adj;
}

Network make_network(int n, std::vector<std::pair<int, int>> edges,
                     std::vector<std::string> node_ids) {
  if (n < 0) throw DomainError("node count must be nonnegative");
  Network net;
  net.n = n;
  if (node_ids.empty()) {
    net.node_ids.reserve(n);
    for (int i = 0; i < n; ++i) net.node_ids.push_back(std::to_string(i));
  } else {
    if (static_cast<int>(node_ids.size()) != n)
      throw ContractError("node_ids length does not match node count");
    net.node_ids = std::move(node_ids);
  }
  for (auto& [i, j] : edges) {
    if (i < 0 || j < 0 || i >= n || j >= n)
      throw ContractError("edge endpoint out of range");
    if (i > j) std::swap(i, j);
  }
  std::sort(edges.begin(), edges.end());
  edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
  edges.erase(std::remove_if(edges.begin(), edges.end(),
                             [](const auto& e) { return e.first == e.second; }),
              edges.end());
  net.edges = std::move(edges);
  return net;
}

Network load_edgelist_csv(const std::filesystem::path& path,
                          const std::vector<std::string>& universe) {
  const CsvTable table = read_csv(path);
  if (table.header.size() != 2 || table.header[0] != "src" ||
      table.header[1] != "dst")
    throw DataError("expected header src,dst in " + path.string());

  std::map<std::string, int> index;
  std::vector<std::string> ids;
  if (!universe.empty()) {
    ids = universe;
    for (int i = 0; i < static_cast<int>(ids.size()); ++i) index[ids[i]] = i;
  } else {
    std::vector<std::string> seen;
    for (const auto& row : table.rows) {
      seen.push_back(row[0]);
      seen.push_back(row[1]);
    }
    std::sort(seen.begin(), seen.end());
    seen.erase(std::unique(seen.begin(), seen.end()), seen.end());
    ids = std::move(seen);
    for (int i = 0; i < static_cast<int>(ids.size()); ++i) index[ids[i]] = i;
  }

  std::vector<std::pair<int, int>> edges;
  long line_no = 1;
  for (const auto& row : table.rows) {
    ++line_no;
    auto a = index.find(row[0]);
    auto b = index.find(row[1]);
    if (a == index.end() || b == index.end())
      throw ParseError("edge endpoint '" +
                           (a == index.end() ? row[0] : row[1]) +
                           "' not in the node universe",
                       line_no);
    edges.emplace_back(a->second, b->second);
  }
  const int n = static_cast<int>(ids.size());
  return make_network(n, std::move(edges), std::move(ids));
}

void write_edgelist_csv(const Network& net, const std::filesystem::path& path) {
  std::ofstream o(path);
  if (!o) throw DataError("cannot write file: " + path.string());
  o << "src,dst\n";
  for (const auto& [i, j] : net.edges)
    o << net.node_ids[i] << ',' << net.node_ids[j] << '\n';
}

NetSummary summary(const Network& net) {
  NetSummary s;
  s.n = net.n;
  s.m = net.m();
  if (net.n >= 2) {
    const double ordered_pairs =
        static_cast<double>(net.n) * static_cast<double>(net.n - 1);
    s.density_unordered = static_cast<double>(s.m) / (ordered_pairs / 2.0);
    s.density_ordered = static_cast<double>(s.m) / ordered_pairs;
  }
  std::vector<int> deg(net.n, 0);
  for (const auto& [i, j] : net.edges) {
    ++deg[i];
    ++deg[j];
  }
  if (!deg.empty()) {
    std::sort(deg.begin(), deg.end());
    s.median_degree = deg[(deg.size() - 1) / 2];
    s.max_degree = deg.back();
  }
  return s;
}

double er_density(const Network& net) {
  if (net.n < 2) throw DomainError("er_density needs at least 2 nodes");
  return static_cast<double>(net.m()) /
         (static_cast<double>(net.n) * static_cast<double>(net.n - 1));
}

Network generate_er(int n, double p, uint64_t seed) {
  if (p < 0.0 || p > 1.0) throw DomainError("edge probability must be in [0,1]");
  Rng rng(seed);
  std::vector<std::pair<int, int>> edges;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      if (rng.uniform01() < p) edges.emplace_back(i, j);
  return make_network(n, std::move(edges));
}

BlockScheme make_block_scheme(std::vector<int> partition, Eigen::MatrixXd densities,
                              std::vector<std::string> block_names) {
  const int b = static_cast<int>(densities.rows());
  if (densities.cols() != b) throw ContractError("density matrix must be square");
  if (!densities.isApprox(densities.transpose(), 1e-12))
    throw ContractError("density matrix must be symmetric");
  for (int i = 0; i < b; ++i)
    for (int j = 0; j < b; ++j)
      if (densities(i, j) < 0.0 || densities(i, j) > 1.0)
        throw DomainError("block density outside [0,1]");
  for (int lbl : partition)
    if (lbl < 0 || lbl >= b) throw ContractError("node block label out of range");
  BlockScheme s;
  s.partition = std::move(partition);
  s.densities = std::move(densities);
  s.block_names = std::move(block_names);
  return s;
}

Network generate_sbm(const BlockScheme& scheme, uint64_t seed) {
  const int n = static_cast<int>(scheme.partition.size());
  Rng rng(seed);
  std::vector<std::pair<int, int>> edges;
  // Same pair order and draw count as generate_er, so a single-block scheme
  // reproduces the ER draw exactly.
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      if (rng.uniform01() < scheme.densities(scheme.partition[i], scheme.partition[j]))
        edges.emplace_back(i, j);
  return make_network(n, std::move(edges));
}

Eigen::MatrixXd block_densities(const Network& net, const std::vector<int>& partition) {
  if (static_cast<int>(partition.size()) != net.n)
    throw ContractError("every node needs a block label");
  int b = 0;
  for (int lbl : partition) {
    if (lbl < 0) throw ContractError("negative block label");
    b = std::max(b, lbl + 1);
  }
  std::vector<double> size(b, 0.0);
  for (int lbl : partition) size[lbl] += 1.0;

  Eigen::MatrixXd counts = Eigen::MatrixXd::Zero(b, b);
  for (const auto& [i, j] : net.edges) {
    counts(partition[i], partition[j]) += 1.0;
    if (partition[i] != partition[j]) counts(partition[j], partition[i]) += 1.0;
  }
  Eigen::MatrixXd rho = Eigen::MatrixXd::Zero(b, b);
  for (int a = 0; a < b; ++a) {
    for (int c = 0; c < b; ++c) {
      if (a == c) {
        const double pairs = size[a] * (size[a] - 1.0) / 2.0;
        rho(a, a) = pairs > 0.0 ? counts(a, a) / pairs : 0.0;
      } else {
        const double pairs = size[a] * size[c];
        rho(a, c) = pairs > 0.0 ? counts(a, c) / pairs : 0.0;
      }
    }
  }
  return rho;
}

namespace {

// Erdos-Gallai: sum even and, for every k,
// sum_{i<=k} d_i <= k(k-1) + sum_{i>k} min(d_i, k) with d sorted descending.
bool graphical(std::vector<int> d) {
  long long total = std::accumulate(d.begin(), d.end(), 0LL);
  if (total % 2 != 0) return false;
  std::sort(d.begin(), d.end(), std::greater<>());
  if (!d.empty() && (d.front() >= static_cast<int>(d.size()) || d.back() < 0))
    return false;
  const int n = static_cast<int>(d.size());
  std::vector<long long> suffix(n + 1, 0);
  for (int i = n - 1; i >= 0; --i) suffix[i] = suffix[i + 1] + d[i];
  long long prefix = 0;
  for (int k = 1; k <= n; ++k) {
    prefix += d[k - 1];
    // First index >= k with d[i] <= k (d sorted descending).
    const auto it = std::lower_bound(d.begin() + k, d.end(), k, std::greater<>());
    const auto m = static_cast<long long>(it - d.begin());
    const long long cap = static_cast<long long>(k) * (k - 1) +
                          static_cast<long long>(k) * (m - k) + suffix[m];
    if (prefix > cap) return false;
  }
  return true;
}

}  // namespace

Network generate_config_model(const std::vector<int>& degrees, uint64_t seed) {
  const int n = static_cast<int>(degrees.size());
  for (int d : degrees)
    if (d < 0) throw DomainError("negative degree");
  if (!graphical(degrees))
    throw DomainError("degree sequence is not graphical");

  const long long m2 = std::accumulate(degrees.begin(), degrees.end(), 0LL);
  const auto m = static_cast<std::size_t>(m2 / 2);
  if (m == 0) return make_network(n, {});

  Rng rng(seed);
  std::vector<int> stubs;
  stubs.reserve(static_cast<std::size_t>(m2));
  for (int i = 0; i < n; ++i)
    for (int d = 0; d < degrees[i]; ++d) stubs.push_back(i);

  const int max_restarts = 50;
  for (int attempt = 0; attempt < max_restarts; ++attempt) {
    // Fisher-Yates pairing of stubs.
    for (std::size_t k = stubs.size() - 1; k > 0; --k)
      std::swap(stubs[k], stubs[static_cast<std::size_t>(rng.uniform_int(static_cast<int>(k + 1)))]);

    // Multigraph with multiplicity bookkeeping.
    std::vector<std::pair<int, int>> edges(m);
    std::unordered_map<uint64_t, int> mult;
    mult.reserve(m * 2);
    for (std::size_t k = 0; k < m; ++k) {
      int a = stubs[2 * k];
      int b = stubs[2 * k + 1];
      if (a > b) std::swap(a, b);
      edges[k] = {a, b};
      ++mult[edge_key(a, b, n)];
    }

    const auto is_bad = [&](std::size_t k) {
      const auto& [a, b] = edges[k];
      return a == b || mult[edge_key(a, b, n)] > 1;
    };
    const auto detach = [&](std::pair<int, int> e) {
      --mult[edge_key(e.first, e.second, n)];
    };
    const auto attach = [&](std::pair<int, int> e) {
      ++mult[edge_key(e.first, e.second, n)];
    };

    // Swap-repair: every self-loop or duplicate edge is rewired against a
    // random partner edge, keeping all degrees fixed.
    bool ok = true;
    long long budget = 400LL * static_cast<long long>(m) + 4000;
    for (std::size_t k = 0; k < m && ok; ++k) {
      while (is_bad(k)) {
        if (--budget < 0) {
          ok = false;
          break;
        }
        const auto other =
            static_cast<std::size_t>(rng.uniform_int(static_cast<int>(m)));
        if (other == k) continue;
        auto [a, b] = edges[k];
        auto [c, d] = edges[other];
        if (rng.uniform01() < 0.5) std::swap(c, d);
        // Proposed replacement: (a,c), (b,d).
        if (a == c || b == d) continue;
        std::pair<int, int> e1{std::min(a, c), std::max(a, c)};
        std::pair<int, int> e2{std::min(b, d), std::max(b, d)};
        if (e1 == e2) continue;
        if (mult.count(edge_key(e1.first, e1.second, n)) &&
            mult[edge_key(e1.first, e1.second, n)] > 0)
          continue;
        if (mult.count(edge_key(e2.first, e2.second, n)) &&
            mult[edge_key(e2.first, e2.second, n)] > 0)
          continue;
        detach(edges[k]);
        detach(edges[other]);
        edges[k] = e1;
        edges[other] = e2;
        attach(e1);
        attach(e2);
      }
    }
    if (!ok) continue;

    // Uniformizing double-edge-swap mixing, 10*m proposal steps; the graph
    // is simple here and every accepted swap keeps it simple.
    for (long long step = 0; step < 10LL * static_cast<long long>(m); ++step) {
      const auto k1 = static_cast<std::size_t>(rng.uniform_int(static_cast<int>(m)));
      const auto k2 = static_cast<std::size_t>(rng.uniform_int(static_cast<int>(m)));
      if (k1 == k2) continue;
      auto [a, b] = edges[k1];
      auto [c, d] = edges[k2];
      if (rng.uniform01() < 0.5) std::swap(c, d);
      if (a == c || a == d || b == c || b == d) continue;
      std::pair<int, int> e1{std::min(a, c), std::max(a, c)};
      std::pair<int, int> e2{std::min(b, d), std::max(b, d)};
      if (mult[edge_key(e1.first, e1.second, n)] > 0 ||
          mult[edge_key(e2.first, e2.second, n)] > 0)
        continue;
      detach(edges[k1]);
      detach(edges[k2]);
      edges[k1] = e1;
      edges[k2] = e2;
      attach(e1);
      attach(e2);
    }
    return make_network(n, std::move(edges));
  }
  throw NumericalError("configuration model repair did not converge");
}

namespace {

std::vector<std::vector<std::pair<int, int>>> distance_classes_impl(
    const Network& net, int k_max, bool parallel) {
  if (k_max < 1) throw DomainError("k_max must be >= 1");
  const int n = net.n;
  const auto adj = net.adjacency();

  // Per-source BFS buckets, merged in source order afterwards so results are
  // identical regardless of thread count.
  std::vector<std::vector<std::vector<int>>> local(
      static_cast<std::size_t>(n));

#pragma omp parallel if (parallel)
  {
    std::vector<int> dist(n);
    std::vector<int> frontier;
    std::vector<int> next;
#pragma omp for schedule(dynamic, 16)
    for (int s = 0; s < n; ++s) {
      std::fill(dist.begin(), dist.end(), -1);
      dist[s] = 0;
      frontier.assign(1, s);
      auto& buckets = local[static_cast<std::size_t>(s)];
      buckets.assign(static_cast<std::size_t>(k_max), {});
      for (int depth = 1; depth <= k_max && !frontier.empty(); ++depth) {
        next.clear();
        for (int u : frontier) {
          for (int v : adj[u]) {
            if (dist[v] != -1) continue;
            dist[v] = depth;
            next.push_back(v);
            if (v > s) buckets[static_cast<std::size_t>(depth - 1)].push_back(v);
          }
        }
        std::swap(frontier, next);
      }
      for (auto& b : buckets) std::sort(b.begin(), b.end());
    }
  }

  std::vector<std::vector<std::pair<int, int>>> classes(
      static_cast<std::size_t>(k_max));
  for (int s = 0; s < n; ++s)
    for (int k = 0; k < k_max; ++k)
      for (int v : local[static_cast<std::size_t>(s)][static_cast<std::size_t>(k)])
        classes[static_cast<std::size_t>(k)].emplace_back(s, v);
  return classes;
}

}  // namespace

std::vector<std::vector<std::pair<int, int>>> distance_classes(const Network& net,
                                                               int k_max) {
  return distance_classes_impl(net, k_max, true);
}

std::vector<std::vector<std::pair<int, int>>> distance_classes_serial(
    const Network& net, int k_max) {
  return distance_classes_impl(net, k_max, false);
}

Eigen::MatrixXd laplacian(const Network& net) {
  Eigen::MatrixXd L = Eigen::MatrixXd::Zero(net.n, net.n);
  for (const auto& [i, j] : net.edges) {
    L(i, j) -= 1.0;
    L(j, i) -= 1.0;
    L(i, i) += 1.0;
    L(j, j) += 1.0;
  }
  return L;
}

AvgCorr avg_corr_on_network(const CorrMatrix& c, const Network& net) {
  if (c.n != net.n)
    throw ContractError("correlation matrix and network sizes differ");
  if (net.edges.empty())
    throw UndefinedMeanError("network has no edges, average undefined");
  AvgCorr out;
  double sum = 0.0;
  for (const auto& [i, j] : net.edges) {
    if (c.overlap(i, j) == 0) {
      ++out.pairs_excluded;
      continue;
    }
    sum += c.entries(i, j);
    ++out.pairs_used;
  }
  if (out.pairs_used == 0)
    throw UndefinedMeanError("all edge pairs have zero overlap");
  out.value = sum / static_cast<double>(out.pairs_used);
  return out;
}

BenchStats benchmark_avg_corr(const CorrMatrix& c, const BenchmarkModel& model,
                              int n_draws, uint64_t seed) {
  if (n_draws < 2) throw DomainError("n_draws must be >= 2");

  std::vector<double> values(static_cast<std::size_t>(n_draws));
  std::vector<char> used(static_cast<std::size_t>(n_draws), 0);
  std::exception_ptr failure;

#pragma omp parallel for schedule(dynamic)
  for (int d = 0; d < n_draws; ++d) {
    try {
      const uint64_t s = derive_seed(seed, static_cast<uint64_t>(d));
      Network draw;
      if (const auto* er = std::get_if<ErModel>(&model)) {
        draw = generate_er(er->n, er->p, s);
      } else if (const auto* sbm = std::get_if<SbmModel>(&model)) {
        draw = generate_sbm(sbm->scheme, s);
      } else {
        draw = generate_config_model(std::get<ConfigModel>(model).degrees, s);
      }
      if (draw.edges.empty()) continue;  // skipped, noted via used[]
      values[static_cast<std::size_t>(d)] = avg_corr_on_network(c, draw).value;
      used[static_cast<std::size_t>(d)] = 1;
    } catch (...) {
#pragma omp critical
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);

  BenchStats stats;
  double sum = 0.0;
  for (int d = 0; d < n_draws; ++d) {
    if (!used[static_cast<std::size_t>(d)]) continue;
    sum += values[static_cast<std::size_t>(d)];
    ++stats.draws_used;
  }
  if (stats.draws_used == 0)
    throw UndefinedMeanError("every benchmark draw was edgeless");
  stats.mean = sum / stats.draws_used;
  double ss = 0.0;
  for (int d = 0; d < n_draws; ++d) {
    if (!used[static_cast<std::size_t>(d)]) continue;
    const double dev = values[static_cast<std::size_t>(d)] - stats.mean;
    ss += dev * dev;
  }
  stats.stdev = stats.draws_used > 1 ? std::sqrt(ss / (stats.draws_used - 1)) : 0.0;
  return stats;
}

std::vector<std::optional<double>> distance_decay(const CorrMatrix& c,
                                                  const Network& net, int k_max) {
  if (c.n != net.n)
    throw ContractError("correlation matrix and network sizes differ");
  const auto classes = distance_classes(net, k_max);
  std::vector<std::optional<double>> out(static_cast<std::size_t>(k_max));
  for (int k = 0; k < k_max; ++k) {
    double sum = 0.0;
    long long cnt = 0;
    for (const auto& [i, j] : classes[static_cast<std::size_t>(k)]) {
      if (c.overlap(i, j) == 0) continue;
      sum += c.entries(i, j);
      ++cnt;
    }
    if (cnt > 0) out[static_cast<std::size_t>(k)] = sum / static_cast<double>(cnt);
  }
  return out;
}

}  // namespace grownet
