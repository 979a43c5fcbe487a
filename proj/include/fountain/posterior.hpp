#pragma once

// Sign-constrained Bayesian regression of frequency on density (and epoch).
//
// The collisional coefficient `a` carries a Heaviside prior theta(-a); the
// intercept `b` is flat and the drift `c`, when modeled, has a Gaussian prior.
// With a Gaussian likelihood the joint posterior is a multivariate normal
// truncated to a <= 0, and every one-dimensional marginal has the form
// N(k | m_k, S_kk) * Phi(-mu_{a|k} / s_{a|k}).

#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "fountain/density.hpp"
#include "fountain/model.hpp"

namespace fountain {

/// Uniform density on a <= 0, zero elsewhere.
struct SignPrior {
  std::string constrained_param = "a";
  /// 0 (log of a constant) for a <= 0, -inf for a > 0.
  double log_value(double a) const;
};

struct DriftPrior {
  double mean;
  double sigma;

  DriftPrior(double mean, double sigma);
  double log_value(double c) const;
};

struct JointModelOptions {
  bool with_drift = false;
  std::optional<DriftPrior> drift_prior;
  /// Epochs enter the design as (t - epoch_origin).
  double epoch_origin = 0.0;
};

struct TruncatedMoments {
  Eigen::VectorXd mean;
  Eigen::MatrixXd covariance;
};

/// Multivariate normal N(mean, covariance) over (a, b[, c]) truncated to
/// a <= 0. Parameter `a` is always index 0.
class JointPosterior {
 public:
  JointPosterior(std::vector<std::string> names, Eigen::VectorXd mean,
                 Eigen::MatrixXd covariance);

  const std::vector<std::string>& names() const { return names_; }
  Eigen::Index dim() const { return mean_.size(); }
  /// Throws std::out_of_range for an unknown name.
  Eigen::Index index(const std::string& name) const;

  const Eigen::VectorXd& mean() const { return mean_; }
  const Eigen::MatrixXd& covariance() const { return covariance_; }
  const Eigen::MatrixXd& precision() const { return precision_; }

  /// -1/2 (theta - m)^T P (theta - m), or -inf when a > 0.
  double log_density(const Eigen::VectorXd& theta) const;

  /// Probability of a <= 0 under the untruncated Gaussian.
  double truncation_mass() const;

  /// Mean and covariance after truncation, from the truncated-normal
  /// moment formulas.
  TruncatedMoments exact_moments() const;

 private:
  std::vector<std::string> names_;
  Eigen::VectorXd mean_;
  Eigen::MatrixXd covariance_;
  Eigen::MatrixXd precision_;
};

/// Joint posterior from the least-squares sufficient statistics of `records`
/// combined with the drift prior. Throws RankDeficient, InvalidPrior.
JointPosterior joint_posterior_npairs(std::span<const MeasurementRecord> records,
                                      const JointModelOptions& options);

/// Log posterior written directly as the product of per-record normals times
/// the priors, without going through sufficient statistics.
double direct_log_joint(std::span<const MeasurementRecord> records,
                        const JointModelOptions& options,
                        const Eigen::VectorXd& theta);

/// Analytic marginal of one parameter. Log-values include the Gaussian
/// normalization of the integrated directions, so they agree pointwise with
/// `marginalize_by_quadrature`.
PosteriorDensity marginalize(const JointPosterior& joint, const std::string& keep,
                             const QuadratureConfig& quadrature = {});

/// Same marginal by nested adaptive quadrature of `joint.log_density` over the
/// nuisance parameters (a over (-inf, 0], others over the real line).
/// Intended as the oracle for `marginalize`.
PosteriorDensity marginalize_by_quadrature(const JointPosterior& joint,
                                           const std::string& keep,
                                           const QuadratureConfig& quadrature = {});

/// Log of the nuisance integral at one value of `keep` (the log-density of
/// the quadrature marginal before it is wrapped in a PosteriorDensity).
double log_marginal_by_quadrature(const JointPosterior& joint, Eigen::Index keep,
                                  double value, const QuadratureConfig& quadrature);

struct TwoPointParameters {
  /// Intercept of the line through the two points and its uncertainty.
  double yhat;
  double sigma_hat;
  /// Density-weighted mean frequency and its uncertainty.
  double ytilde;
  double sigma_tilde;
  /// Plain mean (y1 + y2) / 2.
  double ybar;
};

TwoPointParameters two_point_parameters(const MeasurementPair& pair, double sigma_y);

/// exp[-(b - yhat)^2 / 2 sigma_hat^2] erfc[-(b - ytilde) / (sqrt2 sigma_tilde)]
/// evaluated in log space.
PosteriorDensity two_point_marginal(const MeasurementPair& pair, double sigma_y,
                                    const QuadratureConfig& quadrature = {});

/// erfc[-(b - y1) / (sqrt2 sigma_y)] from a single measurement: improper.
PosteriorDensity single_pair_marginal(const MeasurementRecord& record, double sigma_y);

/// Posterior after each pair, feeding each step's posterior in as the next
/// prior (covariance-form Kalman update on top of the first pair's exact
/// two-point solution). Element i is the posterior after pairs 0..i.
std::vector<JointPosterior> sequential_joints(std::span<const MeasurementPair> pairs);

/// b-marginal at the end of the sequential chain.
PosteriorDensity sequential_update(std::span<const MeasurementPair> pairs,
                                   const QuadratureConfig& quadrature = {});

}  // namespace fountain
