// c14rate: changepoint rate estimation for radiocarbon determination sets.
//
// Subcommands: calibrate, spd, pp-fit, summarize, simulate.  Every stochastic
// subcommand requires an explicit --seed and is byte-reproducible given one.
// Exit codes: 0 success, 2 usage error, 3 data/parse error, 4 numerical
// failure.

#include <cstdio>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "c14rate/calibration.hpp"
#include "c14rate/errors.hpp"
#include "c14rate/persist.hpp"
#include "c14rate/posterior.hpp"
#include "c14rate/ppmodel.hpp"
#include "c14rate/sampler.hpp"
#include "c14rate/sim.hpp"
#include "c14rate/spd.hpp"
#include "c14rate/svg.hpp"

namespace fs = std::filesystem;
using namespace c14rate;

namespace {

// Curve paths that do not exist as given fall back to $C14RATE_CURVE_DIR.
std::string resolve_curve_path(const std::string& path) {
  if (fs::exists(path)) return path;
  const char* dir = std::getenv("C14RATE_CURVE_DIR");
  if (dir != nullptr && *dir != '\0') {
    fs::path candidate = fs::path(dir) / path;
    if (fs::exists(candidate)) return candidate.string();
  }
  throw DataError("curve file not found: " + path +
                  (dir ? " (also looked in " + std::string(dir) + ")"
                       : " (set C14RATE_CURVE_DIR for a default location)"));
}

std::string sanitise_id(const std::string& id) {
  std::string out;
  for (char c : id) out += (std::isalnum(static_cast<unsigned char>(c)) ? c : '_');
  return out.empty() ? std::string("det") : out;
}

fs::path ensure_dir(const std::string& dir) {
  fs::path p(dir);
  std::error_code ec;
  fs::create_directories(p, ec);
  if (ec) throw DataError("cannot create output directory: " + dir);
  return p;
}

struct GridArgs {
  double start = 0, end = 0, step = 1.0;
  bool has_start = false, has_end = false;

  void attach(CLI::App* cmd) {
    cmd->add_option("--grid-start", start, "grid start (cal yr BP); default from the data")
        ->check(CLI::Number);
    cmd->add_option("--grid-end", end, "grid end (cal yr BP); default from the data");
    cmd->add_option("--grid-step", step, "grid cell width in years")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
  }

  CalendarGrid resolve(CLI::App* cmd, const std::vector<Determination>& dets,
                       const CalibrationCurve& curve) {
    has_start = cmd->count("--grid-start") > 0;
    has_end = cmd->count("--grid-end") > 0;
    double a = start, b = end;
    if (!has_start || !has_end) {
      auto [lo, hi] = default_bounds(dets, curve);
      if (!has_start) a = lo;
      if (!has_end) b = hi;
    }
    // snap the span to a whole number of cells
    long cells = std::max(1L, std::lround((b - a) / step));
    return CalendarGrid(a, a + cells * step, step);
  }
};

std::string chain_path(const std::string& out, int chain, int n_chains) {
  if (n_chains == 1) return out;
  fs::path p(out);
  fs::path stem = p.stem();
  fs::path ext = p.extension();
  return (p.parent_path() / (stem.string() + "_chain" + std::to_string(chain) + ext.string()))
      .string();
}

std::string sidecar_path(const std::string& samples_path) {
  fs::path p(samples_path);
  return (p.parent_path() / (p.stem().string() + "_moves.json")).string();
}

DensityGrid null_density_from_file(const std::string& path, const CalendarGrid& grid) {
  if (fs::path(path).extension() == ".json") {
    RateFunction rate = read_truth_rate(path);
    Eigen::ArrayXd values(grid.n_cells());
    for (int j = 0; j < grid.n_cells(); ++j) values(j) = rate_at(rate, grid.centre(j));
    double total = values.sum() * grid.step;
    if (!(total > 0)) throw DataError("null rate has no mass on the analysis grid");
    return DensityGrid{grid, values / total, true};
  }
  DensityGrid null_model = read_density_csv(path);
  if (std::abs(null_model.grid.start - grid.start) > 1e-9 ||
      std::abs(null_model.grid.end - grid.end) > 1e-9 ||
      std::abs(null_model.grid.step - grid.step) > 1e-9) {
    throw DataError("null-model grid does not match the analysis grid");
  }
  return DensityGrid{grid, null_model.values, true};
}

// ---------------------------------------------------------------------------

int cmd_calibrate(const std::string& curve_path, const std::string& dets_path,
                  const std::string& out_dir, GridArgs& grid_args, CLI::App* cmd) {
  CalibrationCurve curve = load_curve(resolve_curve_path(curve_path));
  std::vector<Determination> dets = load_determinations(dets_path);
  CalendarGrid grid = grid_args.resolve(cmd, dets, curve);
  fs::path out = ensure_dir(out_dir);
  for (const auto& det : dets) {
    DensityGrid density = calibrate_one(det, curve, grid);
    std::vector<std::string> provenance = {
        "calibrated density of determination " + det.id + ": " + format_double(det.x) +
            " +/- " + format_double(det.sigma) + " 14C yr BP",
        "curve: " + curve_path,
    };
    write_density_csv(density, (out / (sanitise_id(det.id) + ".csv")).string(), provenance);
  }
  std::cout << "calibrated " << dets.size() << " determination(s) on [" << grid.start << ", "
            << grid.end << "] step " << grid.step << " -> " << out_dir << "\n";
  return 0;
}

int cmd_spd(const std::string& curve_path, const std::string& dets_path,
            const std::string& out_dir, GridArgs& grid_args, CLI::App* cmd, int bootstrap,
            const std::string& mc_null, int replicates, double level, double sigma_obs,
            std::uint64_t seed) {
  CalibrationCurve curve = load_curve(resolve_curve_path(curve_path));
  std::vector<Determination> dets = load_determinations(dets_path);
  CalendarGrid grid = grid_args.resolve(cmd, dets, curve);
  fs::path out = ensure_dir(out_dir);

  DensityGrid estimate = spd(dets, curve, grid);
  std::vector<std::string> provenance = {
      "summed probability distribution of " + std::to_string(dets.size()) + " determinations",
      "curve: " + curve_path,
  };
  write_density_csv(estimate, (out / "spd.csv").string(), provenance, "spd");

  if (bootstrap > 0) {
    BootstrapResult boot = spd_bootstrap(dets, curve, grid, bootstrap, level, seed);
    std::vector<std::string> prov = provenance;
    prov.push_back("bootstrap band: " + std::to_string(bootstrap) + " replicates, level " +
                   format_double(level) + ", seed " + std::to_string(seed));
    write_band_csv(grid, boot.estimate.values, boot.band, "spd",
                   (out / "spd_bootstrap.csv").string(), prov);
  }
  if (!mc_null.empty()) {
    DensityGrid null_model = null_density_from_file(mc_null, grid);
    EnvelopeResult env =
        spd_mc_envelope(null_model, static_cast<int>(dets.size()), curve, grid, replicates,
                        level, seed, sigma_obs, &estimate);
    std::vector<std::string> prov = provenance;
    prov.push_back("Monte-Carlo envelope under null model " + mc_null + ": " +
                   std::to_string(replicates) + " replicates, level " + format_double(level) +
                   ", sigma_obs " + format_double(sigma_obs) + ", seed " +
                   std::to_string(seed));
    if (env.exit_fraction) {
      prov.push_back("observed SPD exits the envelope on fraction " +
                     format_double(*env.exit_fraction) + " of cells");
    }
    write_band_csv(grid, estimate.values, env.band, "spd", (out / "spd_envelope.csv").string(),
                   prov);
    if (env.exit_fraction) {
      std::cout << "envelope exit fraction: " << *env.exit_fraction << "\n";
    }
  }
  std::cout << "wrote SPD outputs to " << out_dir << "\n";
  return 0;
}

int cmd_pp_fit(const std::string& curve_path, const std::string& dets_path,
               const std::string& out_path, CLI::App* cmd, double ta, double tb,
               PriorSpec prior_args, ChainOptions options, int chains) {
  CalibrationCurve curve = load_curve(resolve_curve_path(curve_path));
  std::vector<Determination> dets = load_determinations(dets_path);

  double t_a = ta, t_b = tb;
  if (cmd->count("--ta") == 0 || cmd->count("--tb") == 0) {
    auto [lo, hi] = default_bounds(dets, curve);
    if (cmd->count("--ta") == 0) t_a = lo;
    if (cmd->count("--tb") == 0) t_b = hi;
  }
  if (!(t_a < t_b)) throw DataError("window start must precede window end (cal BP)");

  PriorSpec prior = default_prior(static_cast<int>(dets.size()), t_a, t_b);
  if (cmd->count("--n-lambda") > 0) prior.n_lambda = prior_args.n_lambda;
  if (cmd->count("--k-max") > 0) prior.k_max = prior_args.k_max;
  if (cmd->count("--alpha") > 0) prior.alpha = prior_args.alpha;
  if (cmd->count("--beta") > 0) prior.beta = prior_args.beta;

  std::vector<std::string> paths(chains);
  std::vector<std::exception_ptr> errors(chains);
  auto run_one = [&](int c) {
    try {
      ChainOptions opt = options;
      if (chains > 1) opt.seed = Rng::derive_seed(options.seed, c);
      PosteriorSamples samples = run_chain(dets, curve, t_a, t_b, prior, opt);
      paths[c] = chain_path(out_path, c, chains);
      write_samples(samples, paths[c]);
      write_move_stats(samples.stats, samples, sidecar_path(paths[c]));
    } catch (...) {
      errors[c] = std::current_exception();
    }
  };
  if (chains == 1) {
    run_one(0);
  } else {
    std::vector<std::thread> workers;
    workers.reserve(chains);
    for (int c = 0; c < chains; ++c) workers.emplace_back(run_one, c);
    for (auto& w : workers) w.join();
  }
  for (auto& err : errors) {
    if (err) std::rethrow_exception(err);
  }
  for (const auto& p : paths) std::cout << "wrote posterior samples to " << p << "\n";
  return 0;
}

int cmd_summarize(const std::string& samples_path, const std::string& out_dir, double level,
                  int cond_k, bool has_cond_k, double bin_width, int height_bins,
                  int realisations, const std::string& plot_path,
                  const std::string& truth_path, const std::string& curve_path,
                  const std::string& dets_path) {
  PosteriorSamples samples = read_samples(samples_path);
  CalendarGrid grid(samples.t_a, samples.t_b, samples.options.grid_step);
  fs::path out = ensure_dir(out_dir);
  std::vector<std::string> provenance = {
      "summary of " + samples_path + " (" + std::to_string(samples.samples.size()) +
          " kept states, seed " + std::to_string(samples.options.seed) + ")",
  };

  RateSummary summary = mean_rate(samples, grid, level);
  write_band_csv(grid, summary.mean, summary.band, "mean", (out / "rate.csv").string(),
                 provenance);

  std::vector<double> counts = changepoint_counts(samples);
  write_histogram_csv(counts, (out / "changepoint_counts.csv").string(), provenance);
  int mode_k = 0;
  for (std::size_t k = 0; k < counts.size(); ++k) {
    if (counts[k] > counts[mode_k]) mode_k = static_cast<int>(k);
  }
  std::cout << "posterior mode of changepoint count: " << mode_k << " (probability "
            << counts[mode_k] << ")\n";

  if (has_cond_k) {
    std::vector<std::string> prov = provenance;
    prov.push_back("conditional on " + std::to_string(cond_k) +
                   " changepoints; index 1 is the oldest");
    std::vector<Histogram> locations = changepoint_locations(samples, cond_k, bin_width);
    write_indexed_histograms_csv(
        locations, (out / ("changepoints_k" + std::to_string(cond_k) + ".csv")).string(), prov);
    std::vector<Histogram> heights = conditional_heights(samples, cond_k, height_bins);
    write_indexed_histograms_csv(
        heights, (out / ("heights_k" + std::to_string(cond_k) + ".csv")).string(), prov);
    RateSummary cond = conditional_mean_rate(samples, cond_k, grid, level);
    write_band_csv(grid, cond.mean, cond.band, "mean",
                   (out / ("rate_k" + std::to_string(cond_k) + ".csv")).string(), prov);
  }

  if (realisations > 0) {
    std::vector<Sample> subset = export_realisations(samples, realisations);
    write_realisations_csv(subset, grid, (out / "realisations.csv").string(), provenance);
  }

  if (!plot_path.empty()) {
    PlotInputs inputs;
    inputs.summary = summary;
    inputs.title = "posterior occurrence rate";
    if (!truth_path.empty()) inputs.truth = read_truth_rate(truth_path);
    CalibrationCurve curve;
    std::vector<Determination> dets;
    if (!curve_path.empty()) {
      curve = load_curve(resolve_curve_path(curve_path));
      inputs.curve = &curve;
    }
    if (!dets_path.empty()) {
      dets = load_determinations(dets_path);
      inputs.dets = &dets;
    }
    write_rate_svg(inputs, plot_path);
    std::cout << "wrote plot to " << plot_path << "\n";
  }
  std::cout << "wrote summaries to " << out_dir << "\n";
  return 0;
}

int cmd_simulate(const std::string& preset_name, const std::string& rate_path,
                 std::uint64_t seed, const std::string& curve_path, const std::string& out_path,
                 const std::string& truth_path, const PresetParams& params, double sigma_obs,
                 bool no_curve_error) {
  PresetResult preset;
  if (!rate_path.empty()) {
    RateFunction rate = read_truth_rate(rate_path);
    preset.name = "custom";
    preset.t_a = rate.t_a;
    preset.t_b = rate.t_b;
    Rng rng(seed);
    preset.events = sample_pp_events(rate, rng);
    preset.piecewise_truth = rate;
  } else {
    preset = make_preset(preset_name, seed, params);
  }

  CalibrationCurve curve = load_curve(resolve_curve_path(curve_path));
  ForwardModelSpec spec;
  spec.sigma_obs = sigma_obs;
  spec.include_curve_error = !no_curve_error;
  Rng rng(Rng::derive_seed(seed, 1));  // separate stream from the event draw
  std::vector<Determination> dets = forward_model(preset.events.ages, curve, spec, rng);

  std::vector<std::string> provenance = {
      "simulated determinations, scenario " + preset.name + ", seed " + std::to_string(seed),
      "events " + std::to_string(preset.events.n()) + ", sigma_obs " + format_double(sigma_obs),
      "curve: " + curve_path,
  };
  write_determinations_csv(dets, out_path, provenance);
  if (!truth_path.empty()) write_truth_json(preset, seed, truth_path);
  std::cout << "simulated " << preset.events.n() << " event(s) -> " << dets.size()
            << " determination(s) in " << out_path << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"rate-changepoint analysis of radiocarbon determination sets"};
  app.set_version_flag("--version", std::string("c14rate ") + kVersion);
  app.set_config("--config", "", "INI config file mirroring long option names (flags win)");
  app.require_subcommand(1);

  // calibrate ---------------------------------------------------------------
  auto* cal = app.add_subcommand("calibrate", "per-determination calibration densities");
  std::string cal_curve, cal_dets, cal_out;
  GridArgs cal_grid;
  cal->add_option("--curve", cal_curve, "calibration curve file")->required();
  cal->add_option("--dets", cal_dets, "determination CSV (id,c14_age,sigma)")->required();
  cal->add_option("--out", cal_out, "output directory")->required();
  cal_grid.attach(cal);

  // spd ---------------------------------------------------------------------
  auto* spd_cmd = app.add_subcommand("spd", "summed probability distribution and bands");
  std::string spd_curve, spd_dets, spd_out, spd_mc_null;
  GridArgs spd_grid;
  int spd_bootstrap_n = 0, spd_replicates = 500;
  double spd_level = 0.95, spd_sigma_obs = 25.0;
  std::uint64_t spd_seed = 0;
  spd_cmd->add_option("--curve", spd_curve, "calibration curve file")->required();
  spd_cmd->add_option("--dets", spd_dets, "determination CSV")->required();
  spd_cmd->add_option("--out", spd_out, "output directory")->required();
  spd_grid.attach(spd_cmd);
  auto* spd_seed_opt = spd_cmd->add_option("--seed", spd_seed, "RNG seed");
  spd_cmd->add_option("--bootstrap", spd_bootstrap_n, "bootstrap band with this many replicates")
      ->check(CLI::Range(2, 1000000))
      ->needs(spd_seed_opt);
  spd_cmd
      ->add_option("--mc-null", spd_mc_null,
                   "Monte-Carlo envelope under this null model (truth JSON or density CSV)")
      ->needs(spd_seed_opt);
  spd_cmd->add_option("--replicates", spd_replicates, "envelope replicate count")
      ->check(CLI::Range(2, 1000000))
      ->capture_default_str();
  spd_cmd->add_option("--level", spd_level, "band level")
      ->check(CLI::Range(0.0, 1.0))
      ->capture_default_str();
  spd_cmd->add_option("--sigma-obs", spd_sigma_obs, "observational error for envelope replicates")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();

  // pp-fit --------------------------------------------------------------rate
  auto* fit = app.add_subcommand("pp-fit", "fit the changepoint Poisson-process model");
  std::string fit_curve, fit_dets, fit_out;
  double fit_ta = 0, fit_tb = 0;
  PriorSpec fit_prior;  // only the explicitly-set fields are applied
  ChainOptions fit_options;
  int fit_chains = 1;
  fit->add_option("--curve", fit_curve, "calibration curve file")->required();
  fit->add_option("--dets", fit_dets, "determination CSV")->required();
  fit->add_option("--out", fit_out, "output JSON-lines samples file")->required();
  fit->add_option("--seed", fit_options.seed, "RNG seed")->required();
  fit->add_option("--ta", fit_ta, "window start (younger edge, cal yr BP)");
  fit->add_option("--tb", fit_tb, "window end (older edge, cal yr BP)");
  fit->add_option("--n-lambda", fit_prior.n_lambda, "prior mean changepoint count")
      ->check(CLI::PositiveNumber);
  fit->add_option("--k-max", fit_prior.k_max, "changepoint count cap")
      ->check(CLI::Range(0, 1000));
  fit->add_option("--alpha", fit_prior.alpha, "height prior shape")->check(CLI::PositiveNumber);
  fit->add_option("--beta", fit_prior.beta, "height prior rate; default n/(tb-ta)")
      ->check(CLI::PositiveNumber);
  fit->add_option("--iters", fit_options.iterations, "MCMC iterations")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  fit->add_option("--burn", fit_options.burn_in, "burn-in iterations")
      ->check(CLI::NonNegativeNumber)
      ->capture_default_str();
  fit->add_option("--thin", fit_options.thin, "keep every thin-th state after burn-in")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  fit->add_option("--grid-step", fit_options.grid_step, "calendar grid cell width")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  fit->add_option("--move-constant", fit_options.move_constant,
                  "birth/death proposal constant in (0, 0.45]")
      ->capture_default_str();
  fit->add_option("--chains", fit_chains, "independent parallel chains (suffixed outputs)")
      ->check(CLI::Range(1, 64))
      ->capture_default_str();
  fit->add_flag("--prior-only", fit_options.prior_only,
                "ignore the data: sample the prior (sampler validation)");

  // summarize -----------------------------------------------------------
  auto* summ = app.add_subcommand("summarize", "posterior summaries, CSV tables, SVG plot");
  std::string summ_samples, summ_out, summ_plot, summ_truth, summ_curve, summ_dets;
  double summ_level = 0.95, summ_bin_width = 5.0;
  int summ_cond_k = 0, summ_height_bins = 40, summ_realisations = 0;
  summ->add_option("--samples", summ_samples, "JSON-lines samples file from pp-fit")->required();
  summ->add_option("--out", summ_out, "output directory")->required();
  summ->add_option("--level", summ_level, "credible band level")
      ->check(CLI::Range(0.0, 1.0))
      ->capture_default_str();
  auto* cond_k_opt =
      summ->add_option("--cond-k", summ_cond_k, "conditional summaries for this changepoint count")
          ->check(CLI::NonNegativeNumber);
  summ->add_option("--bin-width", summ_bin_width, "location histogram bin width (years)")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  summ->add_option("--height-bins", summ_height_bins, "height histogram bin count")
      ->check(CLI::Range(1, 100000))
      ->capture_default_str();
  summ->add_option("--realisations", summ_realisations, "export this many rate realisations")
      ->check(CLI::PositiveNumber);
  summ->add_option("--plot", summ_plot, "write an SVG panel of the fitted rate here");
  summ->add_option("--truth", summ_truth, "truth sidecar JSON to overlay on the plot");
  summ->add_option("--curve", summ_curve, "calibration curve to overlay on the plot");
  summ->add_option("--dets", summ_dets, "determinations to show as a rug on the plot");

  // simulate ------------------------------------------------------------
  auto* sim = app.add_subcommand("simulate", "draw synthetic determinations from a scenario");
  std::string sim_preset, sim_rate, sim_curve, sim_out, sim_truth;
  std::uint64_t sim_seed = 0;
  PresetParams sim_params;
  double sim_sigma_obs = 25.0;
  bool sim_no_curve_error = false;
  auto* source = sim->add_option_group("source", "what to simulate from");
  source->add_option("--preset", sim_preset,
                     "scenario name: uniform-phase, four-changepoint, exp-growth");
  source->add_option("--rate", sim_rate, "piecewise rate from a truth sidecar JSON");
  source->require_option(1);
  sim->add_option("--seed", sim_seed, "RNG seed")->required();
  sim->add_option("--curve", sim_curve, "calibration curve file")->required();
  sim->add_option("--out", sim_out, "output determination CSV")->required();
  sim->add_option("--truth", sim_truth, "write the generating truth sidecar JSON here");
  sim->add_option("--n", sim_params.n_uniform, "uniform-phase event count")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  sim->add_option("--growth-r", sim_params.growth_r, "exp-growth rate per year")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  sim->add_option("--sigma-obs", sim_sigma_obs, "observational error (14C yr)")
      ->check(CLI::NonNegativeNumber)
      ->capture_default_str();
  sim->add_flag("--no-curve-error", sim_no_curve_error,
                "exclude the curve error tau from the measurement variance");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (cal->parsed()) {
      return cmd_calibrate(cal_curve, cal_dets, cal_out, cal_grid, cal);
    }
    if (spd_cmd->parsed()) {
      return cmd_spd(spd_curve, spd_dets, spd_out, spd_grid, spd_cmd, spd_bootstrap_n,
                     spd_mc_null, spd_replicates, spd_level, spd_sigma_obs, spd_seed);
    }
    if (fit->parsed()) {
      return cmd_pp_fit(fit_curve, fit_dets, fit_out, fit, fit_ta, fit_tb, fit_prior,
                        fit_options, fit_chains);
    }
    if (summ->parsed()) {
      return cmd_summarize(summ_samples, summ_out, summ_level, summ_cond_k,
                           cond_k_opt->count() > 0, summ_bin_width, summ_height_bins,
                           summ_realisations, summ_plot, summ_truth, summ_curve, summ_dets);
    }
    if (sim->parsed()) {
      return cmd_simulate(sim_preset, sim_rate, sim_seed, sim_curve, sim_out, sim_truth,
                          sim_params, sim_sigma_obs, sim_no_curve_error);
    }
  } catch (const ParseError& e) {
    std::cerr << "parse error: " << e.what() << "\n";
    return 3;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 3;
  } catch (const NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << "\n";
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  return 0;
}
