#pragma once

#include <functional>

namespace fountain {

struct QuadratureConfig {
  double rel_tol = 1e-8;
  /// Convergence is also accepted once the error estimate falls below this.
  double abs_tol = 0.0;
  /// Maximum number of bisections of any single panel.
  int max_depth = 30;
};

struct QuadratureResult {
  double value;
  double error;
  int evaluations;
};

/// Globally adaptive 7/15-point Gauss-Kronrod integration over a finite
/// interval. The panel with the largest error estimate is bisected until the
/// summed error is within tolerance. Throws QuadratureNonConvergence when the
/// worst panel is already at `max_depth`.
QuadratureResult integrate(const std::function<double(double)>& f, double lo,
                           double hi, const QuadratureConfig& config = {});

/// Non-adaptive 15-point Kronrod rule; used for short sub-panel integrals
/// where the integrand is already resolved.
double kronrod15(const std::function<double(double)>& f, double lo, double hi);

}  // namespace fountain
