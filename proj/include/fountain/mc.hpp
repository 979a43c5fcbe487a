#pragma once

// Inverse Monte Carlo check of the two-point intercept posterior.
//
// Each run draws a synthetic pair from a fixed line, maps it onto the target
// measurement result and keeps the mapped intercept when the mapped slope is
// negative. The kept intercepts are a sample from the sign-constrained
// posterior regardless of the line used to generate them.

#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <vector>

#include "fountain/density.hpp"

namespace fountain {

struct McConfig {
  std::size_t n_runs = 100000;
  std::uint64_t seed = 1;
  double init_a = -0.5;
  double init_b = 0.0;
  double x1 = 1.0;
  double x2 = 3.0;
  double y1_target = 0.0;
  double y2_target = -1.0;
  /// Runs per independent RNG stream.
  std::size_t chunk_size = 10000;
  /// Worker threads; results do not depend on this.
  unsigned threads = 1;
  /// Histogram bin count; Freedman-Diaconis when unset.
  std::optional<std::size_t> bins;

  /// Throws InvalidMcConfig unless n_runs >= 1000 and x2 > x1.
  void validate() const;
};

struct Histogram {
  std::vector<double> edges;
  std::vector<std::size_t> counts;

  std::size_t total() const;
  /// counts / (total * width) for bin i.
  double density(std::size_t i) const;
};

Histogram make_histogram(std::span<const double> samples,
                         std::optional<std::size_t> bins = {});

struct McResult {
  std::vector<double> accepted_b;
  /// Mapped slope of each accepted run, parallel to accepted_b.
  std::vector<double> accepted_a;
  double acceptance_rate = 0.0;
  Histogram histogram;
  std::uint64_t seed = 0;
  std::size_t n_runs = 0;
};

McResult inverse_mc(const McConfig& config);

struct McComparison {
  double ks_distance;
  double chi2;
  int chi2_bins;
  int chi2_dof;
  double chi2_p_value;
  std::size_t samples;
};

/// Kolmogorov-Smirnov distance against the density's CDF and Pearson chi2
/// over the histogram, adjacent bins merged until every expected count is at
/// least 5. Throws TooFewSamples below 1000 samples.
McComparison compare_to_analytic(const McResult& result,
                                 const PosteriorDensity& density);

/// Sup distance between the empirical CDF of `samples` and `density`.
double ks_distance(std::span<const double> samples, const PosteriorDensity& density);

/// Two-sample Kolmogorov-Smirnov distance.
double ks_distance_two_sample(std::span<const double> a, std::span<const double> b);

/// Draws `n` samples from a proper density by inverting its CDF.
std::vector<double> sample_from(const PosteriorDensity& density, std::size_t n,
                                std::uint64_t seed);

struct BruteForceConfig {
  /// At most 1000.
  std::size_t attempts = 1000;
  /// Half-width of the acceptance window around each target.
  double tolerance = 0.5;
  /// Slope prior uniform on [a_min, 0], intercept uniform on [b_min, b_max].
  double a_min = -4.0;
  double b_min = -4.0;
  double b_max = 6.0;
  std::uint64_t seed = 1;
  double x1 = 1.0;
  double x2 = 3.0;
  double y1_target = 0.0;
  double y2_target = -1.0;
};

/// Direct rejection variant: draws (a, b) from a box prior, simulates a pair
/// and keeps b when both frequencies land within `tolerance` of the targets.
/// A small-scale cross-check only.
McResult brute_force_mc(const BruteForceConfig& config);

/// Reproducible standard normal stream: mt19937_64 bits, 53-bit uniforms and
/// the Box-Muller transform.
class NormalStream {
 public:
  explicit NormalStream(std::uint64_t seed);
  double uniform();
  double normal();

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

std::uint64_t splitmix64(std::uint64_t x);

}  // namespace fountain
