#include <cstdio>
#include <cstdlib>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "fountain/errors.hpp"
#include "fountain/pipeline.hpp"

#ifndef FOUNTAIN_DATA_DIR
#define FOUNTAIN_DATA_DIR "data"
#endif

namespace {

using namespace fountain;

constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitNumerical = 3;

struct Common {
  std::string config;
  std::string input;
  std::string output_dir;
  std::vector<std::string> settings;
};

void add_common(CLI::App* cmd, Common& c, bool with_input) {
  cmd->add_option("-c,--config", c.config, "key = value configuration file")
      ->check(CLI::ExistingFile);
  if (with_input) cmd->add_option("-i,--input", c.input, "campaign CSV");
  cmd->add_option("-o,--output-dir", c.output_dir, "directory for report and plot data");
  cmd->add_option("--set", c.settings, "override a setting, key=value (repeatable)");
}

// Precedence: built-in defaults < config file < environment < flags.
AnalysisConfig resolve(const Common& c) {
  AnalysisConfig config;
  config.input = std::filesystem::path(FOUNTAIN_DATA_DIR) / "campaign.csv";
  if (!c.config.empty()) config = load_config(c.config, config);
  if (const char* env = std::getenv(kOutputDirEnv); env && *env) config.output_dir = env;
  for (const auto& s : c.settings) {
    const auto eq = s.find('=');
    if (eq == std::string::npos) throw ConfigError("--set expects key=value, got '" + s + "'");
    apply_setting(config, s.substr(0, eq), s.substr(eq + 1));
  }
  if (!c.input.empty()) config.input = c.input;
  if (!c.output_dir.empty()) config.output_dir = c.output_dir;
  config.validate();
  return config;
}

void print_summary_line(const std::string& name, const PosteriorSummary& s) {
  std::printf("  %-2s mean %9.4f  std %7.4f  mode %9.4f  [%9.4f, %9.4f]\n", name.c_str(),
              s.mean, s.std, s.mode, s.interval.lo, s.interval.hi);
}

int cmd_analyze(const Common& common, bool no_drift, bool mc) {
  AnalysisConfig config = resolve(common);
  if (no_drift) config.with_drift = false;
  if (mc) config.run_mc = true;
  const AnalysisReport rep = run_analysis(config);

  std::printf("records %zu  epoch origin %.4f d  dataset %s\n", rep.records,
              rep.epoch_origin, rep.dataset_hash.c_str());
  std::printf("classical\n");
  for (const auto& name : rep.names) {
    const auto& p = rep.classical_params.at(name);
    std::printf("  %-2s %9.4f +- %7.4f\n", name.c_str(), p.estimate, p.std);
  }
  std::printf("bayesian\n");
  for (const auto& name : rep.names) print_summary_line(name, rep.bayesian.at(name));
  std::printf("uncertainty reduction on b: %.1f%%\n", 100.0 * rep.uncertainty_reduction);
  const auto& ab = rep.absolute.at("b/bayesian");
  std::printf("b = (%.3g +- %.2g) relative, (%.3g +- %.2g) Hz\n", ab.mean_relative,
              ab.std_relative, ab.mean_hz, ab.std_hz);
  if (rep.mc)
    std::printf("mc: %zu samples, KS %.4f, chi2 %.2f over %d bins, p %.3f\n",
                rep.mc->samples, rep.mc->ks_distance, rep.mc->chi2, rep.mc->chi2_bins,
                rep.mc->chi2_p_value);
  std::printf("report written to %s\n",
              (config.output_dir / "report.json").string().c_str());
  return 0;
}

int cmd_mc(const Common& common, const McConfig& overrides, bool have_runs, bool have_seed,
           bool have_threads, bool have_bins) {
  AnalysisConfig config = resolve(common);
  McConfig mc = config.mc;
  if (have_runs) mc.n_runs = overrides.n_runs;
  if (have_seed) mc.seed = overrides.seed;
  if (have_threads) mc.threads = overrides.threads;
  if (have_bins) mc.bins = overrides.bins;
  mc.validate();

  const McResult result = inverse_mc(mc);
  MeasurementRecord low, high;
  low.density = mc.x1;
  low.frequency = mc.y1_target;
  high.density = mc.x2;
  high.frequency = mc.y2_target;
  high.role = DensityRole::high;
  const PosteriorDensity density =
      two_point_marginal(MeasurementPair(low, high), 1.0, config.quadrature);
  const McComparison cmp = compare_to_analytic(result, density);
  const auto path = write_mc_histogram(result, density, config.output_dir);

  std::printf("runs %zu  accepted %zu (%.1f%%)  seed %llu\n", mc.n_runs, cmp.samples,
              100.0 * result.acceptance_rate,
              static_cast<unsigned long long>(mc.seed));
  std::printf("KS distance %.5f\n", cmp.ks_distance);
  std::printf("chi2 %.3f  bins %d  dof %d  p %.4f\n", cmp.chi2, cmp.chi2_bins, cmp.chi2_dof,
              cmp.chi2_p_value);
  std::printf("histogram written to %s\n", path.string().c_str());
  return 0;
}

int cmd_two_point(double x1, double x2, double y1, double y2, double sigma,
                  const std::string& grid_out, double prob, bool hdi) {
  MeasurementRecord low, high;
  low.density = x1;
  low.frequency = y1;
  low.sigma = sigma;
  high.density = x2;
  high.frequency = y2;
  high.sigma = sigma;
  high.role = DensityRole::high;
  const MeasurementPair pair(low, high);
  const TwoPointParameters p = two_point_parameters(pair, sigma);
  const PosteriorDensity d = two_point_marginal(pair, sigma);
  const PosteriorSummary s =
      summarize(d, prob, hdi ? IntervalKind::highest_density : IntervalKind::central);

  std::printf("unconstrained line: b = %.6f +- %.6f\n", p.yhat, p.sigma_hat);
  std::printf("weighted mean %.6f +- %.6f  plain mean %.6f\n", p.ytilde, p.sigma_tilde,
              p.ybar);
  std::printf("posterior: mean %.6f  std %.6f  mode %.6f\n", s.mean, s.std, s.mode);
  std::printf("%g%% %s interval [%.6f, %.6f]\n", 100.0 * prob, hdi ? "HDI" : "central",
              s.interval.lo, s.interval.hi);
  if (!grid_out.empty()) {
    std::string text = "b,density\n";
    char buf[80];
    for (double x : d.grid()) {
      std::snprintf(buf, sizeof buf, "%.17g,%.17g\n", x, d.pdf(x));
      text += buf;
    }
    write_text(grid_out, text);
  }
  return 0;
}

int cmd_inspect(const Common& common) {
  const AnalysisConfig config = resolve(common);
  const CampaignDataset ds = ingest(config.input, config.epoch_step);
  std::size_t n_low = 0;
  for (const auto& r : ds.records) n_low += r.role == DensityRole::low;
  std::ostringstream canonical;
  write_dataset(ds, canonical);

  std::printf("input %s\n", config.input.string().c_str());
  std::printf("records %zu (low %zu, high %zu)\n", ds.records.size(), n_low,
              ds.records.size() - n_low);
  std::printf("mean low density %.6g, mean low frequency %.6g\n", ds.rho_low, ds.nu_low);
  std::printf("epochs 0 .. %.4f d, record step %.4f d\n", ds.records.back().epoch,
              ds.epoch_step);
  std::printf("dataset hash %s\n", hash_hex(fnv1a64(canonical.str())).c_str());

  std::size_t flagged = 0, pairs = 0;
  for (std::size_t i = 0; i + 1 < ds.records.size(); ++i) {
    const auto& r0 = ds.records[i];
    const auto& r1 = ds.records[i + 1];
    if (r0.role != DensityRole::low || r1.role != DensityRole::high) continue;
    ++pairs;
    try {
      const NeglectCheck chk = neglect_density_uncertainty_check(MeasurementPair(r0, r1));
      if (!chk.acceptable) {
        ++flagged;
        std::printf("  records %zu-%zu: %s\n", i + 1, i + 2, chk.warning.c_str());
      }
    } catch (const DegenerateDensities& e) {
      ++flagged;
      std::printf("  records %zu-%zu: %s\n", i + 1, i + 2, e.what());
    }
  }
  std::printf("low/high pairs %zu, density-uncertainty warnings %zu\n", pairs, flagged);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sign-constrained density extrapolation for fountain clock campaigns"};
  app.set_version_flag("--version", std::string(kToolVersion));
  app.require_subcommand(1);

  Common analyze_opts;
  bool no_drift = false, with_mc = false;
  auto* analyze = app.add_subcommand("analyze", "classical and Bayesian campaign analysis");
  add_common(analyze, analyze_opts, true);
  analyze->add_flag("--no-drift", no_drift, "fit without the linear drift term");
  analyze->add_flag("--mc", with_mc, "also run the Monte Carlo validation");

  Common mc_opts;
  McConfig mc_over;
  std::size_t bins = 0;
  auto* mc = app.add_subcommand("mc-validate", "inverse Monte Carlo check of the two-point posterior");
  add_common(mc, mc_opts, false);
  auto* runs_opt = mc->add_option("--runs", mc_over.n_runs, "number of simulated runs");
  auto* seed_opt = mc->add_option("--seed", mc_over.seed, "RNG seed");
  auto* threads_opt = mc->add_option("--threads", mc_over.threads, "worker threads");
  auto* bins_opt = mc->add_option("--bins", bins, "histogram bins (default Freedman-Diaconis)");

  double x1 = 1, x2 = 3, y1 = 0, y2 = -1, sigma = 1, prob = 0.95;
  bool hdi = false;
  std::string grid_out;
  auto* two = app.add_subcommand("two-point", "posterior of the intercept from one pair");
  two->add_option("--x1", x1, "low density")->capture_default_str();
  two->add_option("--x2", x2, "high density")->capture_default_str();
  two->add_option("--y1", y1, "low-density frequency")->capture_default_str();
  two->add_option("--y2", y2, "high-density frequency")->capture_default_str();
  two->add_option("--sigma", sigma, "frequency uncertainty")->capture_default_str();
  two->add_option("--prob", prob, "interval probability")->capture_default_str();
  two->add_flag("--hdi", hdi, "highest-density interval instead of central");
  two->add_option("--grid", grid_out, "write the density grid to this CSV");

  Common inspect_opts;
  auto* inspect = app.add_subcommand("inspect", "summarize an input dataset");
  add_common(inspect, inspect_opts, true);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitUsage;
  }

  try {
    if (*analyze) return cmd_analyze(analyze_opts, no_drift, with_mc);
    if (*mc) {
      if (bins_opt->count() > 0) mc_over.bins = bins;
      return cmd_mc(mc_opts, mc_over, runs_opt->count() > 0, seed_opt->count() > 0,
                    threads_opt->count() > 0, bins_opt->count() > 0);
    }
    if (*two) return cmd_two_point(x1, x2, y1, y2, sigma, grid_out, prob, hdi);
    if (*inspect) return cmd_inspect(inspect_opts);
  } catch (const Error& e) {
    std::fprintf(stderr, "error [%s]: %s\n", e.module().c_str(), e.what());
    return e.kind() == ErrorKind::numerical ? kExitNumerical : kExitData;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitData;
  }
  return kExitUsage;
}
