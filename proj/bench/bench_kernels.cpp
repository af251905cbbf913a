// Timing harness for the OpenMP kernels against their serial references.
// Build and run:  cmake --build build --target bench_kernels && ./build/bench_kernels

#include <omp.h>

#include "grownet/netstats.hpp"
#include "grownet/pipeline.hpp"
#include "grownet/rng.hpp"
#include "grownet/spectral.hpp"
#include "grownet/synth.hpp"

#include <chrono>
#include <cstdio>
#include <functional>
#include <limits>
#include <string>
#include <vector>

using namespace grownet;

namespace {

double time_best_of(int reps, const std::function<void()>& fn) {
  double best = std::numeric_limits<double>::infinity();
  for (int r = 0; r < reps; ++r) {
    const auto t0 = std::chrono::steady_clock::now();
    fn();
    const auto t1 = std::chrono::steady_clock::now();
    best = std::min(best, std::chrono::duration<double>(t1 - t0).count());
  }
  return best;
}

GrowthPanel masked_panel(int n, int t, uint64_t seed) {
  Rng rng(seed);
  GrowthPanel g;
  g.values = Eigen::MatrixXd::Zero(n, t);
  g.mask = BoolArray::Constant(n, t, true);
  for (int i = 0; i < n; ++i) {
    g.firm_ids.push_back("f" + std::to_string(i));
    const int start = rng.uniform_int(t / 3);
    for (int tt = 0; tt < t; ++tt) {
      if (tt < start || rng.uniform01() < 0.08) {
        g.mask(i, tt) = false;
        g.values(i, tt) = std::numeric_limits<double>::quiet_NaN();
      } else {
        g.values(i, tt) = rng.normal();
      }
    }
  }
  g.timestamps.resize(static_cast<std::size_t>(t));
  for (int q = 0; q < t; ++q) g.timestamps[static_cast<std::size_t>(q)] = q;
  g.rescaled = false;
  return rescale_loo(g);
}

void report(const std::string& name, double serial, double parallel) {
  std::printf("%-34s serial %8.3f s   openmp %8.3f s   speedup %.2fx\n",
              name.c_str(), serial, parallel, serial / parallel);
}

}  // namespace

int main() {
  std::printf("threads: %d\n\n", omp_get_max_threads());

  {
    const GrowthPanel g = masked_panel(400, 800, 1);
    const double ser = time_best_of(3, [&] { corr_matrix_serial(g, 0, 8); });
    const double par = time_best_of(3, [&] { corr_matrix(g, 0, 8); });
    report("corr_matrix n=400 t=800", ser, par);
  }

  {
    const Network net = generate_er(4000, 0.002, 2);
    const double ser = time_best_of(3, [&] { distance_classes_serial(net, 4); });
    const double par = time_best_of(3, [&] { distance_classes(net, 4); });
    report("distance_classes n=4000 k=4", ser, par);
  }

  {
    const GrowthPanel g = masked_panel(150, 500, 3);
    const int saved = omp_get_max_threads();
    omp_set_num_threads(1);
    const double ser = time_best_of(2, [&] {
      surrogate_spectrum(g, 8, 5, SurrogateSource::Empirical, 8);
    });
    omp_set_num_threads(saved);
    const double par = time_best_of(2, [&] {
      surrogate_spectrum(g, 8, 5, SurrogateSource::Empirical, 8);
    });
    report("surrogate_spectrum 8 sets n=150", ser, par);
  }

  {
    const int saved = omp_get_max_threads();
    omp_set_num_threads(1);
    const double ser =
        time_best_of(2, [&] { spectral_target_er(150, 0.05, 500, 7); });
    omp_set_num_threads(saved);
    const double par =
        time_best_of(2, [&] { spectral_target_er(150, 0.05, 500, 7); });
    report("spectral_target_er n=150 x500", ser, par);
  }

  {
    const GrowthPanel g = masked_panel(200, 400, 8);
    const CorrMatrix c = corr_matrix(g, 0, 8);
    const int saved = omp_get_max_threads();
    omp_set_num_threads(1);
    const double ser = time_best_of(2, [&] {
      benchmark_avg_corr(c, ErModel{200, 0.05}, 50, 11);
    });
    omp_set_num_threads(saved);
    const double par = time_best_of(2, [&] {
      benchmark_avg_corr(c, ErModel{200, 0.05}, 50, 11);
    });
    report("benchmark_avg_corr 50 draws", ser, par);
  }

  return 0;
}
