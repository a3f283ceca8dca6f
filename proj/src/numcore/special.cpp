#include "fimscore/numcore/special.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "fimscore/errors.hpp"

namespace fimscore {

double lgamma(double x) {
  if (!(x > 0.0) || !std::isfinite(x)) {
    throw DomainError("lgamma: argument must be positive and finite, got " + std::to_string(x));
  }
#if defined(__GLIBC__)
  int sign = 0;
  return ::lgamma_r(x, &sign);  // reentrant: leaves signgam untouched
#else
  return std::lgamma(x);
#endif
}

double std_normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

double std_normal_log_pdf(double z) { return -kHalfLog2Pi - 0.5 * z * z; }

}  // namespace fimscore
