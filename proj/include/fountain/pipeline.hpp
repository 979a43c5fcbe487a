#pragma once

// Campaign analysis: CSV ingestion, epoch reconstruction, classical and
// Bayesian fits, report and plot-data emission.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "fountain/density.hpp"
#include "fountain/mc.hpp"
#include "fountain/model.hpp"
#include "fountain/posterior.hpp"

namespace fountain {

inline constexpr const char* kToolVersion = "0.1.0";
inline constexpr int kReportSchemaVersion = 1;
inline constexpr const char* kCsvHeader =
    "density,density_sigma,frequency,frequency_sigma,role";
inline constexpr double kCaesiumHz = 9192631770.0;
/// Default interval between consecutive low/high measurement cycles, days.
inline constexpr double kDefaultEpochStep = 0.313;
inline constexpr const char* kOutputDirEnv = "FOUNTAIN_OUTPUT_DIR";

enum class Weighting { uniform, individual };
enum class CovarianceScaling { residual, nominal };
enum class EpochOrigin { mean, first };

struct AnalysisConfig {
  std::filesystem::path input;
  bool with_drift = true;
  double drift_prior_mean = 0.41;
  double drift_prior_sigma = 0.05;
  /// Interval between low/high cycles; consecutive records are half apart.
  double epoch_step = kDefaultEpochStep;
  EpochOrigin epoch_origin = EpochOrigin::mean;
  double interval_prob = 0.95;
  IntervalKind interval_kind = IntervalKind::central;
  Weighting classical_weighting = Weighting::uniform;
  CovarianceScaling classical_covariance = CovarianceScaling::residual;
  QuadratureConfig quadrature;
  double sigma_nu = 3.9e-15;
  bool run_mc = false;
  McConfig mc;
  std::filesystem::path output_dir = "out";

  /// Throws ConfigError.
  void validate() const;
};

/// Applies one `key = value` setting. Unknown keys throw ConfigError.
void apply_setting(AnalysisConfig& config, const std::string& key,
                   const std::string& value);

/// Parses line-oriented `key = value` text ('#' starts a comment). Relative
/// `input`/`output_dir` paths are resolved against `base_dir`.
AnalysisConfig parse_config(std::istream& in, const AnalysisConfig& defaults = {},
                            const std::filesystem::path& base_dir = {});
AnalysisConfig load_config(const std::filesystem::path& path,
                           const AnalysisConfig& defaults = {});

/// Canonical text of every setting, one `key = value` per line.
std::string config_text(const AnalysisConfig& config);

/// Parses the CSV schema; densities are rescaled so the low-density mean is
/// one and epochs are left at zero.
CampaignDataset parse_dataset(std::istream& in);
void write_dataset(const CampaignDataset& dataset, std::ostream& out);

/// Record k gets epoch k * record_step.
CampaignDataset reconstruct_epochs(CampaignDataset dataset, double record_step);

/// Reads, normalizes and assigns epochs (record spacing epoch_step / 2).
CampaignDataset ingest(const std::filesystem::path& path,
                       double epoch_step = kDefaultEpochStep);

std::uint64_t fnv1a64(std::string_view bytes);
std::string hash_hex(std::uint64_t h);

struct ClassicalParameter {
  double estimate;
  double std;
};

struct AbsoluteValue {
  /// As a fraction of the caesium frequency.
  double mean_relative;
  double std_relative;
  double mean_hz;
  double std_hz;
};

struct AnalysisReport {
  std::vector<std::string> names;
  LinearFit classical;
  std::map<std::string, ClassicalParameter> classical_params;
  std::map<std::string, PosteriorSummary> bayesian;
  double uncertainty_reduction = 0.0;
  /// Keyed by "<param>/classical" and "<param>/bayesian".
  std::map<std::string, AbsoluteValue> absolute;
  double sigma_nu = 0.0;
  double epoch_origin = 0.0;
  std::size_t records = 0;
  double rho_low = 1.0;
  double nu_low = 0.0;
  std::string config_hash;
  std::string dataset_hash;
  std::optional<McComparison> mc;
  double mc_acceptance_rate = 0.0;
};

struct AnalysisOutcome {
  AnalysisReport report;
  CampaignDataset dataset;
  std::optional<JointPosterior> joint;
  std::vector<PosteriorDensity> marginals;
  std::optional<McResult> mc;
  std::optional<McComparison> mc_comparison;
  std::optional<PosteriorDensity> mc_density;
};

/// Classical fit exactly as run by the analysis on `dataset`.
LinearFit classical_fit(const CampaignDataset& dataset, const AnalysisConfig& config,
                        double epoch_origin);
double epoch_origin_of(const CampaignDataset& dataset, EpochOrigin origin);

/// Pure computation on an already ingested dataset.
AnalysisOutcome analyze(const AnalysisConfig& config, const CampaignDataset& dataset);

/// Ingests the configured input, analyzes it and writes the report and plot
/// data into the output directory.
AnalysisReport run_analysis(const AnalysisConfig& config);

nlohmann::ordered_json report_to_json(const AnalysisReport& report,
                                      const AnalysisConfig& config);

/// posterior_<param>.csv, scatter_driftfree.csv and (when MC ran)
/// mc_histogram.csv. Returns the written paths. Throws IoError.
std::vector<std::filesystem::path> emit_plot_data(const AnalysisOutcome& outcome,
                                                  const std::filesystem::path& dir);

/// mc_histogram.csv from an MC run and the analytic density it is checked
/// against.
std::filesystem::path write_mc_histogram(const McResult& result,
                                         const PosteriorDensity& density,
                                         const std::filesystem::path& dir);

void write_text(const std::filesystem::path& path, const std::string& text);

}  // namespace fountain
