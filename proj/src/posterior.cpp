#include "fountain/posterior.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

#include "fountain/errors.hpp"
#include "fountain/special.hpp"

namespace fountain {
namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
// Half-width, in conditional standard deviations, of the nuisance ranges
// integrated by the quadrature marginal. exp(-14^2/2) ~ 1e-43.
constexpr double kNuisanceWidth = 14.0;
// Half-width, in marginal standard deviations, of the initial support.
constexpr double kSupportWidth = 10.0;

const double kLog2Pi = std::log(2.0 * std::numbers::pi);

struct Range {
  double lo;
  double hi;
};

}  // namespace

double SignPrior::log_value(double a) const { return a <= 0.0 ? 0.0 : kNegInf; }

DriftPrior::DriftPrior(double mean_, double sigma_) : mean(mean_), sigma(sigma_) {
  if (!(sigma > 0.0) || !std::isfinite(sigma) || !std::isfinite(mean))
    throw InvalidPrior("drift prior needs a finite mean and positive sigma");
}

double DriftPrior::log_value(double c) const {
  const double z = (c - mean) / sigma;
  return -0.5 * z * z;
}

JointPosterior::JointPosterior(std::vector<std::string> names,
                               Eigen::VectorXd mean, Eigen::MatrixXd covariance)
    : names_(std::move(names)), mean_(std::move(mean)), covariance_(std::move(covariance)) {
  if (static_cast<Eigen::Index>(names_.size()) != mean_.size() ||
      covariance_.rows() != mean_.size() || covariance_.cols() != mean_.size())
    throw InvalidRecord("joint posterior dimensions disagree");
  if (names_.empty() || names_.front() != "a")
    throw InvalidPrior("the sign-constrained parameter 'a' must come first");
  Eigen::LLT<Eigen::MatrixXd> llt(covariance_);
  if (llt.info() != Eigen::Success)
    throw RankDeficient("joint covariance is not positive definite");
  precision_ = llt.solve(Eigen::MatrixXd::Identity(mean_.size(), mean_.size()));
  precision_ = 0.5 * (precision_ + precision_.transpose()).eval();
}

Eigen::Index JointPosterior::index(const std::string& name) const {
  const auto it = std::find(names_.begin(), names_.end(), name);
  if (it == names_.end()) throw std::out_of_range("no parameter named '" + name + "'");
  return it - names_.begin();
}

double JointPosterior::log_density(const Eigen::VectorXd& theta) const {
  if (theta(0) > 0.0) return kNegInf;
  const Eigen::VectorXd d = theta - mean_;
  return -0.5 * d.dot(precision_ * d);
}

double JointPosterior::truncation_mass() const {
  return std::exp(log_ndtr(-mean_(0) / std::sqrt(covariance_(0, 0))));
}

TruncatedMoments JointPosterior::exact_moments() const {
  const double s_aa = covariance_(0, 0);
  const double sd_a = std::sqrt(s_aa);
  const double alpha = -mean_(0) / sd_a;  // standardized upper bound
  const double lambda = inverse_mills(alpha);
  const double mean_a = mean_(0) - sd_a * lambda;
  const double var_a = s_aa * (1.0 - alpha * lambda - lambda * lambda);

  const Eigen::VectorXd gain = covariance_.col(0) / s_aa;
  TruncatedMoments out;
  out.mean = mean_ + gain * (mean_a - mean_(0));
  out.covariance = covariance_ - gain * gain.transpose() * s_aa +
                   gain * gain.transpose() * var_a;
  return out;
}

JointPosterior joint_posterior_npairs(std::span<const MeasurementRecord> records,
                                      const JointModelOptions& options) {
  if (records.empty()) throw EmptyDataset("no records for the joint posterior");
  if (options.with_drift && !options.drift_prior)
    throw InvalidPrior("drift model requested without a drift prior");
  const Eigen::MatrixXd design =
      build_design(records, options.with_drift, options.epoch_origin);
  if (!options.with_drift) {
    const LinearFit fit =
        weighted_least_squares(design, frequencies(records), sigmas(records));
    return JointPosterior({"a", "b"}, fit.params, fit.covariance);
  }

  // Information form, so the drift prior can make up for too few records.
  const Eigen::VectorXd w = sigmas(records).array().square().inverse();
  Eigen::MatrixXd info = design.transpose() * w.asDiagonal() * design;
  Eigen::VectorXd h = design.transpose() * (w.array() * frequencies(records).array()).matrix();
  const DriftPrior& prior = *options.drift_prior;
  info(2, 2) += 1.0 / (prior.sigma * prior.sigma);
  h(2) += prior.mean / (prior.sigma * prior.sigma);
  const Eigen::JacobiSVD<Eigen::MatrixXd> svd(info);
  const auto& sv = svd.singularValues();
  if (!(sv(sv.size() - 1) > 0.0) || sv(0) / sv(sv.size() - 1) > 1e12)
    throw RankDeficient("posterior information matrix is singular");
  Eigen::MatrixXd cov = info.inverse();
  cov = 0.5 * (cov + cov.transpose()).eval();
  Eigen::VectorXd mean = cov * h;
  return JointPosterior({"a", "b", "c"}, std::move(mean), std::move(cov));
}

double direct_log_joint(std::span<const MeasurementRecord> records,
                        const JointModelOptions& options,
                        const Eigen::VectorXd& theta) {
  const double a = theta(0), b = theta(1);
  const double c = options.with_drift ? theta(2) : 0.0;
  double log_p = SignPrior{}.log_value(a);
  if (log_p == kNegInf) return log_p;
  for (const auto& r : records) {
    double mu = a * r.density + b;
    if (options.with_drift) mu += c * (r.epoch - options.epoch_origin);
    const double z = (r.frequency - mu) / r.sigma;
    log_p -= 0.5 * z * z;
  }
  if (options.with_drift && options.drift_prior)
    log_p += options.drift_prior->log_value(c);
  return log_p;
}

namespace {

Support marginal_support(const JointPosterior& joint, Eigen::Index k) {
  const TruncatedMoments tm = joint.exact_moments();
  const double sd = std::sqrt(joint.covariance()(k, k));
  const double lo = std::min(joint.mean()(k), tm.mean(k)) - kSupportWidth * sd;
  const double hi = std::max(joint.mean()(k), tm.mean(k)) + kSupportWidth * sd;
  if (k == 0) return {lo, std::min(hi, 0.0), false, hi >= 0.0};
  return {lo, hi};
}

double log_det(const Eigen::MatrixXd& m) {
  return 2.0 * Eigen::LLT<Eigen::MatrixXd>(m).matrixL().toDenseMatrix().diagonal()
                   .array().log().sum();
}

// Range of the truncated nuisance `a` given a conditional mean and sd.
Range truncated_range(double mu, double sd) {
  return {std::min(0.0, mu) - kNuisanceWidth * sd,
          std::min(0.0, mu + kNuisanceWidth * sd)};
}

// log of the integral of exp(g) over [lo, hi], with g referenced to its value
// at `anchor` to keep the exponentials in range.
double log_integral(const std::function<double(double)>& g, Range r,
                    double ref, const QuadratureConfig& q) {
  if (!std::isfinite(ref)) return kNegInf;
  const double v =
      integrate([&](double t) { return std::exp(g(t) - ref); }, r.lo, r.hi, q).value;
  return v > 0.0 ? ref + std::log(v) : kNegInf;
}

}  // namespace

PosteriorDensity marginalize(const JointPosterior& joint, const std::string& keep,
                             const QuadratureConfig& quadrature) {
  const Eigen::Index k = joint.index(keep);
  const Eigen::Index d = joint.dim();
  const Eigen::MatrixXd& s = joint.covariance();
  const Eigen::VectorXd& m = joint.mean();
  const double s_kk = s(k, k);
  const double constant = 0.5 * static_cast<double>(d - 1) * kLog2Pi +
                          0.5 * (log_det(s) - std::log(s_kk));
  const double m_k = m(k);

  PosteriorDensity::LogDensity f;
  if (k == 0) {
    f = [=](double a) {
      if (a > 0.0) return kNegInf;
      return constant - 0.5 * (a - m_k) * (a - m_k) / s_kk;
    };
  } else {
    const double m_a = m(0);
    const double slope = s(0, k) / s_kk;
    const double sd_cond = std::sqrt(s(0, 0) - s(0, k) * s(0, k) / s_kk);
    f = [=](double v) {
      const double mu_a = m_a + slope * (v - m_k);
      return constant - 0.5 * (v - m_k) * (v - m_k) / s_kk +
             log_ndtr(-mu_a / sd_cond);
    };
  }
  return PosteriorDensity(keep, std::move(f), marginal_support(joint, k), quadrature);
}

double log_marginal_by_quadrature(const JointPosterior& joint, Eigen::Index k,
                                  double value, const QuadratureConfig& q) {
  const Eigen::Index d = joint.dim();
  const Eigen::VectorXd& m = joint.mean();
  const Eigen::MatrixXd& p = joint.precision();
  const Eigen::MatrixXd& s = joint.covariance();
  if (k == 0 && value > 0.0) return kNegInf;

  std::vector<Eigen::Index> nuisance;
  for (Eigen::Index i = 0; i < d; ++i)
    if (i != k) nuisance.push_back(i);
  // Integrate `a` innermost when it is a nuisance.
  std::sort(nuisance.begin(), nuisance.end());

  // 1-D integral over parameter j with everything else fixed in theta.
  const auto inner = [&](Eigen::VectorXd theta, Eigen::Index j) {
    double shift = 0.0;
    for (Eigen::Index l = 0; l < d; ++l)
      if (l != j) shift += p(j, l) * (theta(l) - m(l));
    const double mu = m(j) - shift / p(j, j);
    const double sd = 1.0 / std::sqrt(p(j, j));
    const Range r = j == 0 ? truncated_range(mu, sd)
                           : Range{mu - kNuisanceWidth * sd, mu + kNuisanceWidth * sd};
    const auto g = [&](double t) {
      theta(j) = t;
      return joint.log_density(theta);
    };
    const double ref = g(std::clamp(mu, r.lo, r.hi));
    return log_integral(g, r, ref, q);
  };

  Eigen::VectorXd theta = m;
  theta(k) = value;
  if (nuisance.size() == 1) return inner(theta, nuisance[0]);

  const Eigen::Index j1 = nuisance[0];
  const Eigen::Index j2 = nuisance[1];
  // Outer range: conditional of j2 given the kept value, widened to include
  // its conditional given j1 = 0 when j1 is the truncated coefficient.
  const double mu_k = m(j2) + s(j2, k) / s(k, k) * (value - m(k));
  const double sd_k = std::sqrt(s(j2, j2) - s(j2, k) * s(j2, k) / s(k, k));
  Range r{mu_k - kNuisanceWidth * sd_k, mu_k + kNuisanceWidth * sd_k};
  std::vector<double> probes = {mu_k};
  if (j1 == 0) {
    const double mu_0 =
        m(j2) - (p(j2, k) * (value - m(k)) + p(j2, 0) * (0.0 - m(0))) / p(j2, j2);
    const double sd_0 = 1.0 / std::sqrt(p(j2, j2));
    r.lo = std::min(r.lo, mu_0 - kNuisanceWidth * sd_0);
    r.hi = std::max(r.hi, mu_0 + kNuisanceWidth * sd_0);
    probes.push_back(mu_0);
  }
  const auto outer = [&](double t) {
    Eigen::VectorXd th = theta;
    th(j2) = t;
    return inner(th, j1);
  };
  for (int i = 0; i <= 8; ++i) probes.push_back(r.lo + (r.hi - r.lo) * i / 8.0);
  double ref = kNegInf;
  for (double t : probes) ref = std::max(ref, outer(t));
  return log_integral(outer, r, ref, q);
}

PosteriorDensity marginalize_by_quadrature(const JointPosterior& joint,
                                           const std::string& keep,
                                           const QuadratureConfig& quadrature) {
  const Eigen::Index k = joint.index(keep);
  auto f = [joint, k, quadrature](double v) {
    return log_marginal_by_quadrature(joint, k, v, quadrature);
  };
  return PosteriorDensity(keep, std::move(f), marginal_support(joint, k), quadrature);
}

TwoPointParameters two_point_parameters(const MeasurementPair& pair, double sigma_y) {
  const TwoPointEstimate line = two_point_extrapolate(pair, sigma_y);
  const double x1 = pair.low().density, x2 = pair.high().density;
  const double y1 = pair.low().frequency, y2 = pair.high().frequency;
  TwoPointParameters out;
  out.yhat = line.intercept;
  out.sigma_hat = line.sigma;
  out.ytilde = (x1 * y1 + x2 * y2) / (x1 + x2);
  out.sigma_tilde = std::hypot(x1, x2) / (x1 + x2) * sigma_y;
  out.ybar = 0.5 * (y1 + y2);
  return out;
}

PosteriorDensity two_point_marginal(const MeasurementPair& pair, double sigma_y,
                                    const QuadratureConfig& quadrature) {
  const TwoPointParameters tp = two_point_parameters(pair, sigma_y);
  auto f = [tp](double b) {
    const double z = (b - tp.yhat) / tp.sigma_hat;
    return -0.5 * z * z +
           log_erfc(-(b - tp.ytilde) / (std::numbers::sqrt2 * tp.sigma_tilde));
  };
  const double lo = std::min({tp.yhat, tp.ytilde, tp.ybar}) - kSupportWidth * tp.sigma_hat;
  const double hi = std::max({tp.yhat, tp.ytilde, tp.ybar}) + kSupportWidth * tp.sigma_hat;
  return PosteriorDensity("b", std::move(f), {lo, hi}, quadrature);
}

PosteriorDensity single_pair_marginal(const MeasurementRecord& record, double sigma_y) {
  validate(record);
  if (!(sigma_y > 0.0)) throw InvalidRecord("sigma_y must be positive");
  const double y1 = record.frequency;
  auto f = [y1, sigma_y](double b) {
    return log_erfc(-(b - y1) / (std::numbers::sqrt2 * sigma_y));
  };
  return PosteriorDensity::improper(
      "b", std::move(f),
      {y1 - kSupportWidth * sigma_y, y1 + kSupportWidth * sigma_y}, std::numbers::ln2);
}

std::vector<JointPosterior> sequential_joints(std::span<const MeasurementPair> pairs) {
  if (pairs.empty()) throw EmptyDataset("sequential update needs at least one pair");

  // First pair: the line through both points, covariance A^-1 R A^-T.
  const auto& first = pairs.front();
  const double x1 = first.low().density, x2 = first.high().density;
  const double gap = x2 - x1;
  Eigen::Matrix2d a_inv;
  a_inv << -1.0 / gap, 1.0 / gap, x2 / gap, -x1 / gap;
  const Eigen::Vector2d y0(first.low().frequency, first.high().frequency);
  const Eigen::Vector2d r0(first.low().sigma * first.low().sigma,
                           first.high().sigma * first.high().sigma);
  Eigen::Vector2d mean = a_inv * y0;
  Eigen::Matrix2d cov = a_inv * r0.asDiagonal() * a_inv.transpose();

  std::vector<JointPosterior> steps;
  steps.reserve(pairs.size());
  steps.emplace_back(std::vector<std::string>{"a", "b"}, mean, cov);

  for (std::size_t i = 1; i < pairs.size(); ++i) {
    const auto& pr = pairs[i];
    Eigen::Matrix2d h;
    h << pr.low().density, 1.0, pr.high().density, 1.0;
    const Eigen::Vector2d y(pr.low().frequency, pr.high().frequency);
    Eigen::Matrix2d r = Eigen::Matrix2d::Zero();
    r(0, 0) = pr.low().sigma * pr.low().sigma;
    r(1, 1) = pr.high().sigma * pr.high().sigma;

    const Eigen::Matrix2d innovation = h * cov * h.transpose() + r;
    const Eigen::Matrix2d gain = cov * h.transpose() * innovation.inverse();
    mean += gain * (y - h * mean);
    // Joseph form keeps the covariance symmetric positive definite.
    const Eigen::Matrix2d ikh = Eigen::Matrix2d::Identity() - gain * h;
    cov = ikh * cov * ikh.transpose() + gain * r * gain.transpose();
    cov = 0.5 * (cov + cov.transpose()).eval();
    steps.emplace_back(std::vector<std::string>{"a", "b"}, mean, cov);
  }
  return steps;
}

PosteriorDensity sequential_update(std::span<const MeasurementPair> pairs,
                                   const QuadratureConfig& quadrature) {
  return marginalize(sequential_joints(pairs).back(), "b", quadrature);
}

}  // namespace fountain
