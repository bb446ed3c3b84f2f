#pragma once

namespace pism {

// Error function with absolute error <= 1e-12 over the reals. Rational
// approximations in three ranges with fixed coefficients (W. J. Cody,
// "Rational Chebyshev approximation for the error function", Math. Comp. 23,
// 1969), so results do not depend on the platform's libm.
double erf(double x);
double erfc(double x);

// Standard normal CDF, Phi(x) = erfc(-x / sqrt(2)) / 2.
double norm_cdf(double x);

}  // namespace pism
