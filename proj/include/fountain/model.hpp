#pragma once

// Measurement types and classical extrapolation.
//
// Units follow the normalized campaign convention: densities in units of the
// mean low density, frequencies in units of the mean frequency uncertainty,
// epochs in days.

#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace fountain {

enum class DensityRole { low, high };

std::string to_string(DensityRole role);

struct MeasurementRecord {
  double density = 1.0;
  double frequency = 0.0;
  double epoch = 0.0;
  double sigma = 1.0;
  /// Ingested for the neglect check only; never enters a fit.
  double density_sigma = 0.0;
  DensityRole role = DensityRole::low;
};

/// Throws InvalidRecord unless sigma > 0, density > 0, density_sigma >= 0.
void validate(const MeasurementRecord& record);

struct CampaignDataset {
  std::vector<MeasurementRecord> records;
  /// Raw mean low density divided out during normalization.
  double rho_low = 1.0;
  /// Mean low-density frequency of the transcribed table, in sigma_nu units.
  double nu_low = 0.0;
  /// Frequency unit as a fraction of the caesium frequency.
  double sigma_nu = 3.9e-15;
  /// Spacing between consecutive records, days.
  double epoch_step = 0.0;
};

/// Throws EmptyDataset / InvalidRecord / NonMonotoneEpoch.
void validate(const CampaignDataset& dataset);

/// One low/high measurement cycle. Construction enforces high > low density.
class MeasurementPair {
 public:
  MeasurementPair(MeasurementRecord low, MeasurementRecord high,
                  double min_gap = 1e-9);

  const MeasurementRecord& low() const noexcept { return low_; }
  const MeasurementRecord& high() const noexcept { return high_; }

  /// Common frequency uncertainty; throws InvalidRecord if the two differ.
  double common_sigma() const;

 private:
  MeasurementRecord low_;
  MeasurementRecord high_;
};

/// Groups consecutive low/high records into pairs (dataset order).
std::vector<MeasurementPair> make_pairs(std::span<const MeasurementRecord> records);

struct TwoPointEstimate {
  double intercept;
  double sigma;
};

/// Line through two points evaluated at zero density, with its uncertainty for
/// a common frequency sigma. If `sigma_y` is not given, both records must
/// carry the same sigma.
TwoPointEstimate two_point_extrapolate(const MeasurementPair& pair,
                                       std::optional<double> sigma_y = {},
                                       double min_gap = 1e-9);

struct LinearFit {
  Eigen::VectorXd params;
  Eigen::MatrixXd covariance;
  /// Inverse of covariance before any residual rescaling (A^T C_y^-1 A).
  Eigen::MatrixXd information;
  double chi2 = 0.0;
  int dof = 0;

  double slope() const { return params(0); }
  double intercept() const { return params(1); }
  double std_error(Eigen::Index i) const;
};

/// Generalized least squares with diagonal data covariance diag(sigma_i^2).
/// Throws RankDeficient when the normal matrix has condition number above
/// `max_condition`.
LinearFit weighted_least_squares(const Eigen::MatrixXd& design,
                                 const Eigen::VectorXd& y,
                                 const Eigen::VectorXd& sigmas,
                                 double max_condition = 1e12);

/// Scales the covariance by chi2/dof (the residual variance estimate used by
/// an unweighted classical fit). Requires dof > 0.
LinearFit scale_by_residuals(LinearFit fit);

/// Rows (density, 1) or (density, 1, epoch - epoch_origin) in record order.
Eigen::MatrixXd build_design(std::span<const MeasurementRecord> records,
                             bool with_drift, double epoch_origin = 0.0);

Eigen::VectorXd frequencies(std::span<const MeasurementRecord> records);
Eigen::VectorXd sigmas(std::span<const MeasurementRecord> records);

/// Sum of squared normalized residuals at `beta`.
double chi_square(const Eigen::MatrixXd& design, const Eigen::VectorXd& y,
                  const Eigen::VectorXd& sigmas, const Eigen::VectorXd& beta);

/// (beta - beta_hat)^T C^-1 (beta - beta_hat) using the fit's information.
double quadratic_form(const LinearFit& fit, const Eigen::VectorXd& beta);

struct NeglectCheck {
  bool acceptable;
  /// ratio_threshold * sigma_y / |y2 - y1|, infinite when y2 == y1.
  double bound;
  /// Empty when acceptable.
  std::string warning;
};

/// Whether the density uncertainty may be dropped from the pair's
/// extrapolation. Uses the larger of the two records' density sigmas and the
/// root-mean-square of their frequency sigmas.
NeglectCheck neglect_density_uncertainty_check(const MeasurementPair& pair,
                                               double ratio_threshold = 0.1);

}  // namespace fountain
