#include "grownet/synth.hpp"

#include "grownet/csv.hpp"
#include "grownet/rng.hpp"

#include <json.hpp>

#include <cmath>
#include <fstream>
#include <limits>
#include <map>

namespace grownet {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr double kTwoPi = 6.283185307179586477;

GrowthPanel blank_panel(int n, int t) {
  GrowthPanel g;
  g.firm_ids.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) g.firm_ids.push_back("f" + std::to_string(i));
  g.timestamps.resize(static_cast<std::size_t>(t));
  for (int q = 0; q < t; ++q) g.timestamps[static_cast<std::size_t>(q)] = q;
  g.values = Eigen::MatrixXd::Zero(n, t);
  g.mask = BoolArray::Constant(n, t, true);
  g.rescaled = false;
  return g;
}

}  // namespace

FactorPanel gen_factor_panel(const FactorModelSpec& spec, uint64_t seed) {
  if (spec.n < 1 || spec.t < 1) throw DomainError("panel dimensions must be positive");
  if (spec.sigma < 0.0) throw DomainError("sigma must be nonnegative");

  Eigen::VectorXd u;
  if (spec.loadings) {
    u = *spec.loadings;
    if (u.size() != spec.n) throw ContractError("loadings length mismatch");
    if (std::abs(u.norm() - 1.0) > 1e-9)
      throw ContractError("loadings must be unit norm");
  } else {
    u = Eigen::VectorXd::Constant(spec.n, 1.0 / std::sqrt(static_cast<double>(spec.n)));
  }

  FactorPanel out;
  out.panel = blank_panel(spec.n, spec.t);
  out.true_mode.values = Eigen::VectorXd::Zero(spec.t);
  out.true_mode.mask = BoolVector::Constant(spec.t, true);

  Rng rng(seed);
  for (int t = 0; t < spec.t; ++t) {
    for (int i = 0; i < spec.n; ++i) out.panel.values(i, t) = rng.normal();
    double v;
    if (spec.mode == CommonModeKind::Sine) {
      // sqrt(2) * sine has unit mean square over whole periods.
      v = std::sqrt(2.0) * std::sin(kTwoPi * spec.sine_freq * t + spec.sine_phase);
    } else {
      v = rng.normal();
    }
    out.true_mode.values[t] = v;
    for (int i = 0; i < spec.n; ++i)
      out.panel.values(i, t) += spec.sigma * u[i] * v;
  }
  return out;
}

double sigma_for_top_eigenvalue(int n, double lambda_top) {
  if (n < 2) throw DomainError("need n >= 2");
  if (!(lambda_top > 1.0)) throw DomainError("lambda_top must exceed 1");
  // Uniform loadings: off-diagonal correlation rho gives top eigenvalue
  // 1 + (n-1) rho, and rho = (sigma^2/n) / (1 + sigma^2/n).
  const double rho = (lambda_top - 1.0) / static_cast<double>(n - 1);
  if (!(rho < 1.0)) throw DomainError("lambda_top unreachable for this n");
  return std::sqrt(static_cast<double>(n) * rho / (1.0 - rho));
}

PlantedInstance gen_gmrf_panel(const Network& net, int t, double eps,
                               double sigma_common, uint64_t seed) {
  if (!(eps > 0.0)) throw DomainError("eps must be positive (singular precision)");
  if (t < 1) throw DomainError("t must be >= 1");
  if (sigma_common < 0.0) throw DomainError("sigma_common must be nonnegative");

  const int n = net.n;
  const Eigen::MatrixXd theta =
      laplacian(net) + eps * Eigen::MatrixXd::Identity(n, n);
  Eigen::LLT<Eigen::MatrixXd> llt(theta);
  if (llt.info() != Eigen::Success)
    throw NumericalError("precision matrix is not positive definite");

  PlantedInstance inst;
  inst.network = net;
  inst.panel = blank_panel(n, t);
  inst.panel.firm_ids = net.node_ids;
  inst.eps = eps;
  inst.sigma_common = sigma_common;
  inst.seed = seed;

  // x = L^-T z has covariance Theta^-1 when Theta = L L^T.
  Rng rng(seed);
  Eigen::VectorXd z(n);
  for (int col = 0; col < t; ++col) {
    for (int i = 0; i < n; ++i) z[i] = rng.normal();
    Eigen::VectorXd x = llt.matrixU().solve(z);
    if (sigma_common > 0.0) x.array() += sigma_common * rng.normal();
    inst.panel.values.col(col) = x;
  }
  return inst;
}

GrowthPanel apply_missingness(const GrowthPanel& panel, MissingPattern pattern,
                              double p_miss, uint64_t seed) {
  if (pattern == MissingPattern::None) return panel;
  if (pattern == MissingPattern::Random && (p_miss < 0.0 || p_miss >= 1.0))
    throw DomainError("p_miss must be in [0, 1)");

  GrowthPanel out = panel;
  const Eigen::Index n = panel.n();
  const Eigen::Index t = panel.t();

  for (Eigen::Index i = 0; i < n; ++i) {
    Rng rng(derive_seed(seed, static_cast<uint64_t>(i)));
    bool done = false;
    for (int attempt = 0; attempt < 10 && !done; ++attempt) {
      std::vector<bool> drop(static_cast<std::size_t>(t), false);
      if (pattern == MissingPattern::Random) {
        for (Eigen::Index tt = 0; tt < t; ++tt)
          if (rng.uniform01() < p_miss) drop[static_cast<std::size_t>(tt)] = true;
      } else {
        const int start = rng.uniform_int(static_cast<int>(t));
        for (Eigen::Index tt = 0; tt < start; ++tt)
          drop[static_cast<std::size_t>(tt)] = true;
      }
      long kept = 0;
      for (Eigen::Index tt = 0; tt < t; ++tt)
        if (panel.mask(i, tt) && !drop[static_cast<std::size_t>(tt)]) ++kept;
      if (kept < 3) continue;
      for (Eigen::Index tt = 0; tt < t; ++tt) {
        if (drop[static_cast<std::size_t>(tt)]) {
          out.mask(i, tt) = false;
          out.values(i, tt) = kNaN;
        } else {
          out.mask(i, tt) = panel.mask(i, tt);
          out.values(i, tt) = panel.values(i, tt);
        }
      }
      done = true;
    }
    if (!done)
      throw InsufficientDataError("firm " + panel.firm_ids[i] +
                                  " kept < 3 observations after 10 redraws");
  }
  return out;
}

std::string to_string(MissingPattern pattern) {
  switch (pattern) {
    case MissingPattern::None: return "none";
    case MissingPattern::Random: return "random";
    case MissingPattern::StaggeredEntry: return "staggered_entry";
  }
  return "none";
}

MissingPattern missing_pattern_from_string(const std::string& s) {
  if (s == "none") return MissingPattern::None;
  if (s == "random") return MissingPattern::Random;
  if (s == "staggered_entry" || s == "staggered") return MissingPattern::StaggeredEntry;
  throw DataError("unknown missing pattern '" + s + "'");
}

void write_instance_bundle(const PlantedInstance& inst,
                           const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  write_growth_csv(inst.panel, dir / "panel.csv");
  write_edgelist_csv(inst.network, dir / "edgelist.csv");

  nlohmann::json params;
  params["n"] = inst.network.n;
  params["t"] = static_cast<long long>(inst.panel.t());
  params["eps"] = inst.eps;
  params["sigma_common"] = inst.sigma_common;
  params["missing"] = to_string(inst.missing);
  params["p_miss"] = inst.p_miss;
  params["seed"] = inst.seed;
  params["node_ids"] = inst.network.node_ids;
  std::ofstream o(dir / "params.json");
  if (!o) throw DataError("cannot write " + (dir / "params.json").string());
  o << params.dump(2) << '\n';
}

PlantedInstance load_instance_bundle(const std::filesystem::path& dir) {
  std::ifstream in(dir / "params.json");
  if (!in) throw DataError("cannot open " + (dir / "params.json").string());
  nlohmann::json params;
  in >> params;

  PlantedInstance inst;
  inst.eps = params.at("eps").get<double>();
  inst.sigma_common = params.at("sigma_common").get<double>();
  inst.missing = missing_pattern_from_string(params.at("missing").get<std::string>());
  inst.p_miss = params.at("p_miss").get<double>();
  inst.seed = params.at("seed").get<uint64_t>();
  const auto node_ids = params.at("node_ids").get<std::vector<std::string>>();

  inst.network = load_edgelist_csv(dir / "edgelist.csv", node_ids);
  const int n = params.at("n").get<int>();
  const int t = params.at("t").get<int>();

  // Rebuild the exact grid from params; the CSV alone cannot recover
  // fully-missing leading/trailing quarters.
  const GrowthPanel loaded = load_growth_csv(dir / "panel.csv", false);
  GrowthPanel panel = blank_panel(n, t);
  panel.firm_ids = node_ids;
  panel.values.setConstant(kNaN);
  panel.mask.setConstant(false);
  std::map<std::string, int> index;
  for (int i = 0; i < n; ++i) index[node_ids[static_cast<std::size_t>(i)]] = i;
  for (Eigen::Index i = 0; i < loaded.n(); ++i) {
    auto it = index.find(loaded.firm_ids[static_cast<std::size_t>(i)]);
    if (it == index.end())
      throw DataError("panel firm '" + loaded.firm_ids[static_cast<std::size_t>(i)] +
                      "' not in bundle node ids");
    for (Eigen::Index tt = 0; tt < loaded.t(); ++tt) {
      if (!loaded.mask(i, tt)) continue;
      const int q = loaded.timestamps[static_cast<std::size_t>(tt)];
      if (q < 0 || q >= t) throw DataError("panel quarter outside bundle grid");
      panel.values(it->second, q) = loaded.values(i, tt);
      panel.mask(it->second, q) = true;
    }
  }
  inst.panel = std::move(panel);
  return inst;
}

}  // namespace grownet
