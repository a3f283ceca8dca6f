#pragma once

namespace fimscore {

// ln Gamma(x) for x > 0; throws DomainError otherwise.
double lgamma(double x);

// Standard normal CDF, Phi(z) = erfc(-z / sqrt 2) / 2.
double std_normal_cdf(double z);

// Standard normal log density.
double std_normal_log_pdf(double z);

inline constexpr double kHalfLog2Pi = 0.91893853320467274178;

}  // namespace fimscore
