#include "fountain/special.hpp"

#include <cmath>
#include <limits>
#include <numbers>

namespace fountain {
namespace {

// Continued fraction exp(z^2) erfc(z) = (1/sqrt(pi)) / (z + (1/2)/(z + 1/(z +
// (3/2)/(z + ...)))), evaluated with the modified Lentz method. Converges
// quickly for z >= 2.
double erfcx_continued_fraction(double z) {
  constexpr double tiny = 1e-300;
  double f = z;
  double c = z;
  double d = 0.0;
  for (int k = 1; k < 500; ++k) {
    const double a = 0.5 * k;
    d = z + a * d;
    if (d == 0.0) d = tiny;
    c = z + a / c;
    if (c == 0.0) c = tiny;
    d = 1.0 / d;
    const double delta = c * d;
    f *= delta;
    if (std::abs(delta - 1.0) < 1e-16) break;
  }
  return std::numbers::inv_sqrtpi / f;
}

constexpr double kContinuedFractionCutoff = 4.0;

}  // namespace

double erfcx(double z) {
  if (std::isnan(z)) return z;
  if (z >= kContinuedFractionCutoff) {
    if (std::isinf(z)) return 0.0;
    return erfcx_continued_fraction(z);
  }
  if (z >= 0.0) return std::exp(z * z) * std::erfc(z);
  if (z < -26.7) return std::numeric_limits<double>::infinity();
  return 2.0 * std::exp(z * z) - erfcx(-z);
}

double log_erfc(double z) {
  if (z < kContinuedFractionCutoff) return std::log(std::erfc(z));
  if (std::isinf(z)) return -std::numeric_limits<double>::infinity();
  return std::log(erfcx_continued_fraction(z)) - z * z;
}

double log_ndtr(double u) {
  return log_erfc(-u / std::numbers::sqrt2) - std::numbers::ln2;
}

double inverse_mills(double u) {
  // phi(u) / Phi(u) = sqrt(2/pi) / erfcx(-u/sqrt2)
  return std::sqrt(2.0 / std::numbers::pi) / erfcx(-u / std::numbers::sqrt2);
}

}  // namespace fountain
