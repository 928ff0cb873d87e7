#ifndef NESTCAST_NUMCORE_SPECIAL_HPP
#define NESTCAST_NUMCORE_SPECIAL_HPP

namespace nestcast::num {

/// Standard normal CDF.  Absolute error below 1e-15 on finite input.
double std_normal_cdf(double x);

/// Upper tail 1 - Phi(x), computed without cancellation for large x.
double std_normal_sf(double x);

/// Inverse of std_normal_cdf on (0, 1).  Throws DomainError outside.
double std_normal_quantile(double p);

/// Standard normal density.
double std_normal_pdf(double x);

}  // namespace nestcast::num

#endif  // NESTCAST_NUMCORE_SPECIAL_HPP
