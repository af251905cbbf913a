// grownet: clean growth panels of common modes, measure network-conditioned
// correlations, and reconstruct latent networks from the cleaned correlation
// matrix. One INI config per run; all randomness flows from [run] seed.

#include "grownet/config.hpp"
#include "grownet/csv.hpp"
#include "grownet/evalx.hpp"
#include "grownet/netstats.hpp"
#include "grownet/panel.hpp"
#include "grownet/pipeline.hpp"
#include "grownet/report_io.hpp"
#include "grownet/rng.hpp"
#include "grownet/sgl.hpp"
#include "grownet/spectral.hpp"
#include "grownet/synth.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>

namespace fs = std::filesystem;
using namespace grownet;

namespace {

fs::path output_dir(const Config& cfg) {
  const fs::path dir = cfg.get_string("output", "directory");
  fs::create_directories(dir);
  return dir;
}

SolverConfig solver_from_config(const Config& cfg) {
  SolverConfig sc;
  sc.alpha = cfg.get_double("solver", "alpha", 0.0);
  sc.beta = cfg.get_double("solver", "beta", 100.0);
  sc.max_iter = static_cast<int>(cfg.get_int("solver", "max_iter", 5000));
  sc.tol = cfg.get_double("solver", "tol", 1e-6);
  return sc;
}

SurrogateSource surrogate_source_from(const std::string& s) {
  if (s == "empirical") return SurrogateSource::Empirical;
  if (s == "gaussian") return SurrogateSource::Gaussian;
  throw DataError("unknown surrogate source '" + s + "'");
}

int cmd_clean(const Config& cfg) {
  const fs::path dir = output_dir(cfg);
  const int min_years = static_cast<int>(cfg.get_int("data", "min_years", 8));
  const int horizon = static_cast<int>(cfg.get_int("clean", "horizon", 4));

  GrowthPanel rescaled;
  if (cfg.has("data", "sales_csv")) {
    const SalesPanel sales =
        load_sales_csv(cfg.get_string("data", "sales_csv"), min_years);
    rescaled = rescale_loo(growth_rates(sales, horizon));
  } else {
    // A pre-built growth panel (e.g. a synthetic bundle) can be cleaned too.
    rescaled = rescale_loo(load_growth_csv(cfg.get_string("data", "panel"), false));
  }

  CleanOptions opts;
  opts.modes_to_remove =
      static_cast<int>(cfg.get_int("clean", "modes_to_remove", 1));
  opts.min_overlap = static_cast<int>(cfg.get_int("clean", "min_overlap", 8));
  opts.n_surrogates = static_cast<int>(cfg.get_int("clean", "surrogates", 10));
  opts.source = surrogate_source_from(
      cfg.get_string("clean", "surrogate_source", "empirical"));
  opts.seed = derive_seed(cfg.seed(), "clean");

  const CleanResult result = clean_market_mode(rescaled, opts);

  write_growth_csv(rescaled, dir / "rescaled_panel.csv");
  write_growth_csv(result.cleaned, dir / "cleaned_panel.csv");
  for (std::size_t k = 0; k < result.modes.size(); ++k)
    write_mode_csv(result.modes[k], rescaled.timestamps,
                   dir / ("mode_" + std::to_string(k + 1) + ".csv"));
  write_spectrum_report_json(result.reports, result.surrogate_eigenvalues,
                             dir / "spectrum_report.json");
  return 0;
}

int cmd_netcorr(const Config& cfg) {
  const fs::path dir = output_dir(cfg);
  const GrowthPanel panel =
      load_growth_csv(cfg.get_string("data", "panel"), true);
  const Network net =
      load_edgelist_csv(cfg.get_string("data", "edgelist"), panel.firm_ids);
  if (net.edges.empty()) throw UndefinedMeanError("network has no edges");

  std::optional<GrowthPanel> cleaned;
  if (cfg.has("data", "panel_cleaned"))
    cleaned = load_growth_csv(cfg.get_string("data", "panel_cleaned"), true);

  const auto taus = cfg.get_int_list("netcorr", "taus", {0});
  const int k_max = static_cast<int>(cfg.get_int("netcorr", "k_max", 3));
  const int min_overlap = static_cast<int>(cfg.get_int("netcorr", "min_overlap", 8));
  const int n_draws = static_cast<int>(cfg.get_int("benchmark", "n_draws", 50));
  const auto models =
      cfg.get_string_list("benchmark", "models", {"er", "sbm", "config"});
  const uint64_t seed = derive_seed(cfg.seed(), "netcorr");

  std::optional<BlockScheme> scheme;
  if (cfg.has("data", "partition")) {
    const auto labels =
        load_partition_labels(cfg.get_string("data", "partition"), panel.firm_ids);
    const auto indices = labels_to_indices(labels);
    scheme = make_block_scheme(indices, block_densities(net, indices));
  }
  std::vector<int> degrees(static_cast<std::size_t>(net.n), 0);
  for (const auto& [i, j] : net.edges) {
    ++degrees[static_cast<std::size_t>(i)];
    ++degrees[static_cast<std::size_t>(j)];
  }
  const double p_match =
      static_cast<double>(net.m()) /
      (static_cast<double>(net.n) * static_cast<double>(net.n - 1) / 2.0);

  std::ofstream avg_csv(dir / "netcorr_avg.csv");
  if (!avg_csv) throw DataError("cannot write netcorr_avg.csv");
  avg_csv << "series,tau,model,mean,std,pairs\n";

  nlohmann::json j;
  j["taus"] = taus;

  const auto run_series = [&](const std::string& name, const GrowthPanel& g) {
    for (int tau : taus) {
      const CorrMatrix c = corr_matrix(g, tau, min_overlap);
      const AvgCorr truth = avg_corr_on_network(c, net);
      avg_csv << name << ',' << tau << ",true," << format_double(truth.value)
              << ",," << truth.pairs_used << '\n';
      nlohmann::json entry;
      entry["series"] = name;
      entry["tau"] = tau;
      entry["true_mean"] = truth.value;
      entry["pairs_used"] = truth.pairs_used;
      entry["pairs_excluded"] = truth.pairs_excluded;
      for (const auto& model : models) {
        BenchStats stats;
        if (model == "er") {
          stats = benchmark_avg_corr(c, ErModel{net.n, p_match}, n_draws,
                                     derive_seed(seed, name + "-er-" + std::to_string(tau)));
        } else if (model == "sbm") {
          if (!scheme) throw DataError("sbm benchmark needs [data] partition");
          stats = benchmark_avg_corr(c, SbmModel{*scheme}, n_draws,
                                     derive_seed(seed, name + "-sbm-" + std::to_string(tau)));
        } else if (model == "config") {
          stats = benchmark_avg_corr(c, ConfigModel{degrees}, n_draws,
                                     derive_seed(seed, name + "-config-" + std::to_string(tau)));
        } else {
          throw DataError("unknown benchmark model '" + model + "'");
        }
        avg_csv << name << ',' << tau << ',' << model << ','
                << format_double(stats.mean) << ',' << format_double(stats.stdev)
                << ',' << stats.draws_used << '\n';
        entry["benchmarks"][model] = {{"mean", stats.mean},
                                      {"std", stats.stdev},
                                      {"draws", stats.draws_used}};
      }
      j["avg_corr"].push_back(entry);
    }
    // Distance decay at tau = 0.
    const CorrMatrix c0 = corr_matrix(g, 0, min_overlap);
    const auto decay = distance_decay(c0, net, k_max);
    nlohmann::json d;
    d["series"] = name;
    for (int k = 0; k < k_max; ++k)
      d["values"].push_back(decay[static_cast<std::size_t>(k)]
                                ? nlohmann::json(*decay[static_cast<std::size_t>(k)])
                                : nlohmann::json());
    j["distance_decay"].push_back(d);
  };

  run_series("raw", panel);
  if (cleaned) run_series("cleaned", *cleaned);

  std::ofstream decay_csv(dir / "distance_decay.csv");
  if (!decay_csv) throw DataError("cannot write distance_decay.csv");
  decay_csv << "series,k,value,pairs\n";
  const auto write_decay = [&](const std::string& name, const GrowthPanel& g) {
    const CorrMatrix c0 = corr_matrix(g, 0, min_overlap);
    const auto classes = distance_classes(net, k_max);
    const auto decay = distance_decay(c0, net, k_max);
    for (int k = 0; k < k_max; ++k) {
      decay_csv << name << ',' << (k + 1) << ',';
      if (decay[static_cast<std::size_t>(k)])
        decay_csv << format_double(*decay[static_cast<std::size_t>(k)]);
      decay_csv << ',' << classes[static_cast<std::size_t>(k)].size() << '\n';
    }
  };
  write_decay("raw", panel);
  if (cleaned) write_decay("cleaned", *cleaned);

  std::ofstream js(dir / "netcorr_report.json");
  if (!js) throw DataError("cannot write netcorr_report.json");
  js << j.dump(2) << '\n';
  return 0;
}

ReconstructionPlan plan_from_config(const Config& cfg,
                                    const std::vector<std::string>& firm_ids) {
  if (!cfg.has_section("plan")) throw DataError("missing config section [plan]");
  ReconstructionPlan plan;
  plan.partition =
      load_partition_labels(cfg.get_string("plan", "partition"), firm_ids);
  plan.spectra_samples =
      static_cast<int>(cfg.get_int("plan", "spectra_samples", 1000));
  plan.solver = solver_from_config(cfg);
  plan.offdiag_max_iter =
      static_cast<int>(cfg.get_int("solver", "offdiag_max_iter", 0));
  plan.seed = derive_seed(cfg.seed(), "reconstruct");

  const CsvTable dens = read_csv(cfg.get_string("plan", "densities"));
  if (dens.header.size() != 3 || dens.header[0] != "block_a" ||
      dens.header[1] != "block_b" || dens.header[2] != "density")
    throw DataError("expected header block_a,block_b,density in density table");
  long line = 1;
  for (const auto& row : dens.rows) {
    ++line;
    const double d = parse_double(row[2], line);
    if (row[0] == row[1]) {
      plan.target_density_diag[row[0]] = d;
    } else {
      const auto key = row[0] < row[1] ? std::make_pair(row[0], row[1])
                                       : std::make_pair(row[1], row[0]);
      plan.target_density_offdiag[key] = d;
    }
  }
  return plan;
}

int cmd_reconstruct(const Config& cfg) {
  const fs::path dir = output_dir(cfg);
  const GrowthPanel panel =
      load_growth_csv(cfg.get_string("data", "panel"), true);
  const int min_overlap = static_cast<int>(cfg.get_int("netcorr", "min_overlap", 8));
  const CorrMatrix c = corr_matrix(panel, 0, min_overlap);
  const ReconstructionPlan plan = plan_from_config(cfg, panel.firm_ids);

  ReconstructionResult result;
  try {
    result = reconstruct_network(c, plan);
  } catch (const PartialResultError& e) {
    Network partial_net = e.partial().net;
    partial_net.node_ids = panel.firm_ids;
    write_edgelist_csv(partial_net, dir / "reconstructed_edgelist.csv");
    write_reconstruction_report_json(e.partial().report,
                                     dir / "reconstruction_report.json");
    std::cerr << "partial result: " << e.what() << '\n';
    return 4;
  }
  result.net.node_ids = panel.firm_ids;
  write_edgelist_csv(result.net, dir / "reconstructed_edgelist.csv");
  write_reconstruction_report_json(result.report,
                                   dir / "reconstruction_report.json");

  if (cfg.has("data", "truth")) {
    const Network truth =
        load_edgelist_csv(cfg.get_string("data", "truth"), panel.firm_ids);
    const auto indices = labels_to_indices(plan.partition);
    const ComparisonReport comparison =
        benchmark_comparison(truth, result.net, indices,
                             static_cast<int>(cfg.get_int("benchmark", "n_draws", 50)),
                             derive_seed(cfg.seed(), "eval"));
    write_comparison_json(comparison, dir / "evaluation.json");
    write_comparison_csv(comparison, dir / "evaluation.csv");
  }
  return 0;
}

int cmd_synth(const Config& cfg) {
  const fs::path dir = output_dir(cfg);
  const std::string kind = cfg.get_string("synth", "kind", "gmrf");
  const uint64_t seed = derive_seed(cfg.seed(), "synth");

  if (kind == "factor") {
    FactorModelSpec spec;
    spec.n = static_cast<int>(cfg.get_int("synth", "n"));
    spec.t = static_cast<int>(cfg.get_int("synth", "t"));
    spec.sigma = cfg.get_double("synth", "sigma", 0.0);
    const std::string mode = cfg.get_string("synth", "mode", "gaussian");
    spec.mode = mode == "sine" ? CommonModeKind::Sine : CommonModeKind::GaussianNoise;
    spec.sine_freq = cfg.get_double("synth", "sine_freq", 0.05);
    spec.sine_phase = cfg.get_double("synth", "sine_phase", 0.0);
    const FactorPanel fp = gen_factor_panel(spec, seed);
    write_growth_csv(fp.panel, dir / "panel.csv");
    write_mode_csv(fp.true_mode, fp.panel.timestamps, dir / "true_mode.csv");
    nlohmann::json j;
    j["kind"] = "factor";
    j["n"] = spec.n;
    j["t"] = spec.t;
    j["sigma"] = spec.sigma;
    j["mode"] = mode;
    j["seed"] = seed;
    j["no_common_mode"] = spec.sigma == 0.0;
    std::ofstream o(dir / "params.json");
    o << j.dump(2) << '\n';
    return 0;
  }
  if (kind != "gmrf") throw DataError("unknown synth kind '" + kind + "'");

  const int n = static_cast<int>(cfg.get_int("synth", "n"));
  const int t = static_cast<int>(cfg.get_int("synth", "t"));
  const std::string graph = cfg.get_string("synth", "graph", "er");
  Network net;
  if (graph == "er") {
    net = generate_er(n, cfg.get_double("synth", "er_p"), derive_seed(seed, "net"));
  } else if (graph == "sbm") {
    const auto sizes = cfg.get_int_list("synth", "blocks", {});
    if (sizes.empty()) throw DataError("[synth] blocks required for graph = sbm");
    const double within = cfg.get_double("synth", "block_density_within");
    const double cross = cfg.get_double("synth", "block_density_cross");
    std::vector<int> partition;
    for (std::size_t b = 0; b < sizes.size(); ++b)
      partition.insert(partition.end(), static_cast<std::size_t>(sizes[b]),
                       static_cast<int>(b));
    if (static_cast<int>(partition.size()) != n)
      throw DataError("[synth] blocks must sum to n");
    Eigen::MatrixXd dens = Eigen::MatrixXd::Constant(
        static_cast<Eigen::Index>(sizes.size()),
        static_cast<Eigen::Index>(sizes.size()), cross);
    dens.diagonal().setConstant(within);
    net = generate_sbm(make_block_scheme(partition, dens), derive_seed(seed, "net"));
  } else {
    throw DataError("unknown synth graph '" + graph + "'");
  }

  PlantedInstance inst =
      gen_gmrf_panel(net, t, cfg.get_double("synth", "eps", 1.0),
                     cfg.get_double("synth", "sigma_common", 0.0),
                     derive_seed(seed, "panel"));
  inst.missing =
      missing_pattern_from_string(cfg.get_string("synth", "missing", "none"));
  inst.p_miss = cfg.get_double("synth", "p_miss", 0.0);
  if (inst.missing != MissingPattern::None)
    inst.panel = apply_missingness(inst.panel, inst.missing, inst.p_miss,
                                   derive_seed(seed, "missing"));
  write_instance_bundle(inst, dir);
  return 0;
}

int cmd_eval(const Config& cfg) {
  const fs::path dir = output_dir(cfg);
  // The node universe is the union of both edge lists; either file may
  // mention nodes the other leaves isolated.
  std::vector<std::string> universe;
  {
    const Network t = load_edgelist_csv(cfg.get_string("data", "truth"));
    const Network p = load_edgelist_csv(cfg.get_string("data", "predicted"));
    universe = t.node_ids;
    universe.insert(universe.end(), p.node_ids.begin(), p.node_ids.end());
    std::sort(universe.begin(), universe.end());
    universe.erase(std::unique(universe.begin(), universe.end()), universe.end());
  }
  const Network truth =
      load_edgelist_csv(cfg.get_string("data", "truth"), universe);
  const Network pred =
      load_edgelist_csv(cfg.get_string("data", "predicted"), universe);
  const auto labels =
      load_partition_labels(cfg.get_string("data", "partition"), truth.node_ids);
  const ComparisonReport report = benchmark_comparison(
      truth, pred, labels_to_indices(labels),
      static_cast<int>(cfg.get_int("benchmark", "n_draws", 50)),
      derive_seed(cfg.seed(), "eval"));
  write_comparison_json(report, dir / "evaluation.json");
  write_comparison_csv(report, dir / "evaluation.csv");
  write_summary_json(summary(truth), dir / "truth_summary.json");
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"growth-correlation network toolkit"};
  app.require_subcommand(1);

  std::string config_path;
  for (const auto& name : {"clean", "netcorr", "reconstruct", "synth", "eval"}) {
    auto* sub = app.add_subcommand(name);
    sub->add_option("--config", config_path, "INI run configuration")->required();
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    const Config cfg = Config::load(config_path);
    cfg.seed();  // seed is mandatory for every command
    if (app.got_subcommand("clean")) return cmd_clean(cfg);
    if (app.got_subcommand("netcorr")) return cmd_netcorr(cfg);
    if (app.got_subcommand("reconstruct")) return cmd_reconstruct(cfg);
    if (app.got_subcommand("synth")) return cmd_synth(cfg);
    if (app.got_subcommand("eval")) return cmd_eval(cfg);
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return 2;
  } catch (const Error& e) {
    std::cerr << "numerical error: " << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  }
  return 0;
}
