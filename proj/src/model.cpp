#include "fountain/model.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "fountain/errors.hpp"

namespace fountain {

std::string to_string(DensityRole role) {
  return role == DensityRole::low ? "low" : "high";
}

void validate(const MeasurementRecord& record) {
  if (!(record.sigma > 0.0) || !std::isfinite(record.sigma))
    throw InvalidRecord("frequency sigma must be positive");
  if (!(record.density > 0.0) || !std::isfinite(record.density))
    throw InvalidRecord("density must be positive");
  if (!(record.density_sigma >= 0.0))
    throw InvalidRecord("density sigma must be non-negative");
  if (!std::isfinite(record.frequency) || !std::isfinite(record.epoch))
    throw InvalidRecord("frequency and epoch must be finite");
}

void validate(const CampaignDataset& dataset) {
  if (dataset.records.empty()) throw EmptyDataset("dataset has no records");
  for (std::size_t i = 0; i < dataset.records.size(); ++i) {
    validate(dataset.records[i]);
    if (i > 0 && !(dataset.records[i].epoch > dataset.records[i - 1].epoch))
      throw NonMonotoneEpoch("epoch of record " + std::to_string(i) +
                             " does not exceed its predecessor");
  }
}

MeasurementPair::MeasurementPair(MeasurementRecord low, MeasurementRecord high,
                                 double min_gap)
    : low_(low), high_(high) {
  validate(low_);
  validate(high_);
  if (!(high_.density - low_.density > min_gap)) {
    std::ostringstream os;
    os << "high density " << high_.density << " does not exceed low density "
       << low_.density << " by more than " << min_gap;
    throw DegenerateDensities(os.str());
  }
}

double MeasurementPair::common_sigma() const {
  const double s1 = low_.sigma;
  const double s2 = high_.sigma;
  if (std::abs(s1 - s2) > 1e-12 * std::max(s1, s2))
    throw InvalidRecord("pair sigmas differ; supply a pooled sigma_y");
  return s1;
}

std::vector<MeasurementPair> make_pairs(std::span<const MeasurementRecord> records) {
  if (records.size() % 2 != 0)
    throw InvalidRecord("pairing requires an even number of records");
  std::vector<MeasurementPair> pairs;
  pairs.reserve(records.size() / 2);
  for (std::size_t i = 0; i < records.size(); i += 2)
    pairs.emplace_back(records[i], records[i + 1]);
  return pairs;
}

TwoPointEstimate two_point_extrapolate(const MeasurementPair& pair,
                                       std::optional<double> sigma_y,
                                       double min_gap) {
  const double x1 = pair.low().density, x2 = pair.high().density;
  const double y1 = pair.low().frequency, y2 = pair.high().frequency;
  const double gap = x2 - x1;
  if (!(gap > min_gap))
    throw DegenerateDensities("density gap " + std::to_string(gap));
  const double s = sigma_y ? *sigma_y : pair.common_sigma();
  if (!(s > 0.0)) throw InvalidRecord("sigma_y must be positive");
  return {y1 - x1 * (y2 - y1) / gap, s * std::hypot(x1, x2) / gap};
}

double LinearFit::std_error(Eigen::Index i) const {
  return std::sqrt(covariance(i, i));
}

LinearFit weighted_least_squares(const Eigen::MatrixXd& design,
                                 const Eigen::VectorXd& y,
                                 const Eigen::VectorXd& sigmas,
                                 double max_condition) {
  const auto n = design.rows();
  const auto p = design.cols();
  if (n == 0) throw EmptyDataset("no observations");
  if (y.size() != n || sigmas.size() != n)
    throw InvalidRecord("design, y and sigma sizes differ");
  if (n < p) throw RankDeficient("fewer observations than parameters");
  for (Eigen::Index i = 0; i < n; ++i)
    if (!(sigmas(i) > 0.0)) throw InvalidRecord("sigma must be positive");

  const Eigen::VectorXd w = sigmas.array().square().inverse();
  const Eigen::MatrixXd normal = design.transpose() * w.asDiagonal() * design;

  Eigen::JacobiSVD<Eigen::MatrixXd> svd(normal);
  const auto& sv = svd.singularValues();
  const double smin = sv(sv.size() - 1);
  if (!(smin > 0.0) || sv(0) / smin > max_condition)
    throw RankDeficient("normal matrix condition number exceeds " +
                        std::to_string(max_condition));

  LinearFit fit;
  fit.information = normal;
  fit.covariance = normal.inverse();
  fit.covariance = 0.5 * (fit.covariance + fit.covariance.transpose()).eval();
  fit.params = fit.covariance * (design.transpose() * w.asDiagonal() * y);
  fit.chi2 = chi_square(design, y, sigmas, fit.params);
  fit.dof = static_cast<int>(n - p);
  return fit;
}

LinearFit scale_by_residuals(LinearFit fit) {
  if (fit.dof <= 0) throw RankDeficient("residual scaling needs dof > 0");
  fit.covariance *= fit.chi2 / fit.dof;
  return fit;
}

Eigen::MatrixXd build_design(std::span<const MeasurementRecord> records,
                             bool with_drift, double epoch_origin) {
  if (records.empty()) throw EmptyDataset("cannot build a design from no records");
  const Eigen::Index n = static_cast<Eigen::Index>(records.size());
  Eigen::MatrixXd design(n, with_drift ? 3 : 2);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& r = records[static_cast<std::size_t>(i)];
    design(i, 0) = r.density;
    design(i, 1) = 1.0;
    if (with_drift) design(i, 2) = r.epoch - epoch_origin;
  }
  return design;
}

Eigen::VectorXd frequencies(std::span<const MeasurementRecord> records) {
  Eigen::VectorXd y(static_cast<Eigen::Index>(records.size()));
  for (std::size_t i = 0; i < records.size(); ++i)
    y(static_cast<Eigen::Index>(i)) = records[i].frequency;
  return y;
}

Eigen::VectorXd sigmas(std::span<const MeasurementRecord> records) {
  Eigen::VectorXd s(static_cast<Eigen::Index>(records.size()));
  for (std::size_t i = 0; i < records.size(); ++i)
    s(static_cast<Eigen::Index>(i)) = records[i].sigma;
  return s;
}

double chi_square(const Eigen::MatrixXd& design, const Eigen::VectorXd& y,
                  const Eigen::VectorXd& sigmas, const Eigen::VectorXd& beta) {
  return ((y - design * beta).array() / sigmas.array()).square().sum();
}

double quadratic_form(const LinearFit& fit, const Eigen::VectorXd& beta) {
  const Eigen::VectorXd d = beta - fit.params;
  return d.dot(fit.information * d);
}

NeglectCheck neglect_density_uncertainty_check(const MeasurementPair& pair,
                                               double ratio_threshold) {
  const double gap = std::abs(pair.high().frequency - pair.low().frequency);
  const double sigma_y =
      std::sqrt(0.5 * (pair.low().sigma * pair.low().sigma +
                       pair.high().sigma * pair.high().sigma));
  const double sigma_x =
      std::max(pair.low().density_sigma, pair.high().density_sigma);
  if (gap == 0.0)
    return {true, std::numeric_limits<double>::infinity(), {}};
  const double bound = ratio_threshold * sigma_y / gap;
  if (sigma_x < bound) return {true, bound, {}};
  std::ostringstream os;
  os << "density sigma " << sigma_x << " is not small against " << bound
     << " (sigma_y/|y2-y1| scaled by " << ratio_threshold << ")";
  return {false, bound, os.str()};
}

}  // namespace fountain
