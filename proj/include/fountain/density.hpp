#pragma once

// One-dimensional posterior densities and their summaries.

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "fountain/quadrature.hpp"

namespace fountain {

struct Support {
  double lo;
  double hi;
  /// A hard bound is never moved when the support is widened (e.g. a <= 0).
  bool lo_hard = false;
  bool hi_hard = false;
};

/// Unnormalized log-density over a named scalar parameter. The normalization
/// constant, a cumulative table over integration panels and a 400-point
/// evaluation grid are computed at construction; afterwards the object is
/// read-only and cheap to copy.
class PosteriorDensity {
 public:
  using LogDensity = std::function<double(double)>;

  static constexpr int kDefaultGridPoints = 400;

  /// Proper density. Soft support ends are widened (x2 about the midpoint)
  /// until the density there is below 1e-12 of the peak.
  PosteriorDensity(std::string name, LogDensity log_density, Support support,
                   const QuadratureConfig& quadrature = {},
                   int grid_points = kDefaultGridPoints);

  /// Non-normalizable density. `plot_range` only bounds the cached grid;
  /// `log_supremum` is the log of the least upper bound of the density.
  static PosteriorDensity improper(std::string name, LogDensity log_density,
                                   Support plot_range, double log_supremum,
                                   int grid_points = kDefaultGridPoints);

  const std::string& name() const;
  bool proper() const;
  Support support() const;
  const QuadratureConfig& quadrature() const;

  double log_unnormalized(double x) const;
  double log_supremum() const;

  // The members below throw ImproperDensity on an improper density.
  double log_norm() const;
  double pdf(double x) const;
  double cdf(double x) const;
  /// Integral of pdf over the support recomputed from scratch.
  double reintegrate() const;

  const std::vector<double>& grid() const;
  const std::vector<double>& grid_log_values() const;

 private:
  struct State;
  explicit PosteriorDensity(std::shared_ptr<const State> state);
  const State& proper_state() const;

  std::shared_ptr<const State> state_;
};

enum class IntervalKind { central, highest_density };

struct CredibleInterval {
  double lo;
  double hi;
  double probability;
};

struct PosteriorSummary {
  double mean;
  double std;
  double mode;
  CredibleInterval interval;
};

/// Moments by quadrature, mode by grid search plus golden-section refinement,
/// equal-tail (default) or highest-density interval from the numerical CDF.
PosteriorSummary summarize(const PosteriorDensity& density,
                           double interval_prob = 0.95,
                           IntervalKind kind = IntervalKind::central);

double quantile(const PosteriorDensity& density, double p);

/// Maximizes `f` on [lo, hi] by golden-section search.
double golden_section_maximize(const std::function<double(double)>& f, double lo,
                               double hi, double x_tol = 1e-12);

}  // namespace fountain
