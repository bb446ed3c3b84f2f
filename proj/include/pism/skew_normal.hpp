#pragma once

#include <cmath>
#include <stdexcept>

#include "pism/erf.hpp"

namespace pism {

inline constexpr double kInvSqrt2Pi = 0.39894228040143267794;

inline double normal_pdf(double lambda, double mu, double sigma) {
  const double z = (lambda - mu) / sigma;
  return kInvSqrt2Pi / sigma * std::exp(-0.5 * z * z);
}

// standard normal density
inline double std_normal_pdf(double t) {
  return kInvSqrt2Pi * std::exp(-0.5 * t * t);
}

namespace detail {

// f(lambda | mu, sigma, alpha) = 2 * N(lambda | mu, sigma) * Phi(alpha * (lambda - mu))
inline double skew_pdf(double lambda, double mu, double sigma, double alpha) {
  return 2.0 * normal_pdf(lambda, mu, sigma) * norm_cdf(alpha * (lambda - mu));
}

struct SkewPdfGrads {
  double d_mu;
  double d_sigma;
  double d_alpha;
};

// Value and closed-form partials. With z = (lambda-mu)/sigma, t = alpha*(lambda-mu):
//   df/dmu    = 2N * (z/sigma * Phi(t) - alpha * phi(t))
//   df/dsigma = 2N * Phi(t) * (z*z - 1) / sigma
//   df/dalpha = 2N * phi(t) * (lambda - mu)
inline double skew_pdf_grad(double lambda, double mu, double sigma,
                            double alpha, SkewPdfGrads* g) {
  const double d = lambda - mu;
  const double z = d / sigma;
  const double n = normal_pdf(lambda, mu, sigma);
  const double t = alpha * d;
  const double cdf = norm_cdf(t);
  const double pdf_t = std_normal_pdf(t);
  const double two_n = 2.0 * n;
  g->d_mu = two_n * (z / sigma * cdf - alpha * pdf_t);
  g->d_sigma = two_n * cdf * (z * z - 1.0) / sigma;
  g->d_alpha = two_n * pdf_t * d;
  return two_n * cdf;
}

}  // namespace detail

inline double skew_normal_pdf(double lambda, double mu, double sigma,
                              double alpha) {
  if (!(sigma > 0.0)) {
    throw std::invalid_argument("skew_normal_pdf: sigma must be > 0");
  }
  return detail::skew_pdf(lambda, mu, sigma, alpha);
}

}  // namespace pism
