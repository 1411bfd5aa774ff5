#pragma once

#include "fspike/fde.hpp"

namespace fspike {

// Lanczos approximation (g = 7, 9 coefficients) with reflection below 1/2.
// Relative accuracy is about 1e-13 on (0, 2].
double gamma_fn(double x);
double log_gamma(double x);

// Crossover below which mittag_leffler switches to the asymptotic expansion.
inline constexpr double kMittagLefflerAsymptoticCrossover = -20.0;
// Hard cap on power-series terms.
inline constexpr int kMittagLefflerMaxTerms = 2000;

// One-parameter Mittag-Leffler function E_alpha(z) = sum z^k / Gamma(alpha k + 1).
//
// Evaluation route by argument:
//   alpha == 1         exp(z)
//   z >= -20           power series, stopped when |term| < 1e-15 |sum|; if the
//                      rounding error implied by the largest term exceeds 1e-12
//                      (alpha < 1, z < 0) the Laplace-integral representation is
//                      used instead
//   z < -20            asymptotic series -sum_k z^-k / Gamma(1 - alpha k),
//                      truncated at its smallest term
// Throws PrecisionError if no route reaches the requested accuracy.
double mittag_leffler(FractionalOrder alpha, double z);

// E_alpha(-x) for x >= 0 and alpha in (0, 1) from the completely monotone
// representation E_alpha(-t^alpha) = int_0^inf K_alpha(r) exp(-r t) dr.
double mittag_leffler_laplace(FractionalOrder alpha, double x);

} // namespace fspike
