#pragma once

namespace fountain {

/// Scaled complementary error function exp(z^2) erfc(z).
double erfcx(double z);

/// log(erfc(z)), finite for every finite z.
double log_erfc(double z);

/// log of the standard normal CDF.
double log_ndtr(double u);

/// phi(u) / Phi(u) for the standard normal, stable for u -> -inf.
double inverse_mills(double u);

}  // namespace fountain
