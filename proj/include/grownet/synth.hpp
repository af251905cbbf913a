#pragma once

#include "grownet/common.hpp"
#include "grownet/netstats.hpp"
#include "grownet/panel.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

namespace grownet {

enum class CommonModeKind { GaussianNoise, Sine };

// x_i(t) = xi_i(t) + sigma * u_i * v(t) with i.i.d. standard normal
// idiosyncratic noise. Loadings default to the uniform unit vector.
struct FactorModelSpec {
  int n = 0;
  int t = 0;
  double sigma = 0.0;
  std::optional<Eigen::VectorXd> loadings;  // unit norm; uniform if absent
  CommonModeKind mode = CommonModeKind::GaussianNoise;
  double sine_freq = 0.05;  // cycles per quarter
  double sine_phase = 0.0;
};

struct FactorPanel {
  GrowthPanel panel;  // fully observed, rescaled = false
  Series true_mode;   // the realized v(t)
};

FactorPanel gen_factor_panel(const FactorModelSpec& spec, uint64_t seed);

// Common-mode strength whose population correlation matrix (uniform
// loadings) has top eigenvalue lambda_top; used to pin toy instances.
double sigma_for_top_eigenvalue(int n, double lambda_top);

enum class MissingPattern { None, Random, StaggeredEntry };

struct PlantedInstance {
  Network network;
  GrowthPanel panel;  // rescaled = false
  double eps = 0.0;
  double sigma_common = 0.0;
  MissingPattern missing = MissingPattern::None;
  double p_miss = 0.0;
  uint64_t seed = 0;
};

// Gaussian Markov random field on the planted network: precision
// Theta = Laplacian(net) + eps*I, t i.i.d. samples from N(0, Theta^-1),
// optionally plus sigma_common * v(t) added to every firm. Columns are
// generated one quarter at a time, so extending t extends (never reshuffles)
// earlier columns for the same seed.
PlantedInstance gen_gmrf_panel(const Network& net, int t, double eps,
                               double sigma_common, uint64_t seed);

// Drops observations: Random drops entries i.i.d. with probability p_miss;
// StaggeredEntry gives each firm a random start quarter and full observation
// afterwards. Rows left with fewer than 3 observations are redrawn up to 10
// times, then it is an error.
GrowthPanel apply_missingness(const GrowthPanel& panel, MissingPattern pattern,
                              double p_miss, uint64_t seed);

// Bundle serialization: panel.csv + edgelist.csv + params.json in a
// directory; load(write(x)) == x.
void write_instance_bundle(const PlantedInstance& inst,
                           const std::filesystem::path& dir);
PlantedInstance load_instance_bundle(const std::filesystem::path& dir);

std::string to_string(MissingPattern pattern);
MissingPattern missing_pattern_from_string(const std::string& s);

}  // namespace grownet
