#pragma once

#include <cmath>
#include <random>
#include <vector>

#include "fountain/model.hpp"

namespace fountain::testing {

inline MeasurementRecord record(double x, double y, double sigma = 1.0,
                                DensityRole role = DensityRole::low, double t = 0.0) {
  MeasurementRecord r;
  r.density = x;
  r.frequency = y;
  r.sigma = sigma;
  r.role = role;
  r.epoch = t;
  return r;
}

inline MeasurementPair pair(double x1, double y1, double x2, double y2, double sigma = 1.0) {
  return MeasurementPair(record(x1, y1, sigma), record(x2, y2, sigma, DensityRole::high));
}

/// Random low/high records with epochs 0.5 apart; sigmas heterogeneous unless
/// `equal_sigma`.
inline std::vector<MeasurementRecord> random_records(std::mt19937_64& rng, int n_pairs,
                                                     bool equal_sigma = false) {
  std::uniform_real_distribution<double> low(0.8, 1.2), ratio(2.5, 4.0), sig(0.6, 1.6),
      yv(-3.0, 3.0);
  std::vector<MeasurementRecord> out;
  double t = 0.0;
  const double common = sig(rng);
  for (int i = 0; i < n_pairs; ++i) {
    const double x1 = low(rng);
    const double x2 = x1 * ratio(rng);
    const double s1 = equal_sigma ? common : sig(rng);
    const double s2 = equal_sigma ? common : sig(rng);
    out.push_back(record(x1, yv(rng), s1, DensityRole::low, t));
    t += 0.5;
    out.push_back(record(x2, yv(rng), s2, DensityRole::high, t));
    t += 0.5;
  }
  return out;
}

}  // namespace fountain::testing
