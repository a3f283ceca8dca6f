#include "fimscore/numcore/finite_diff.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "fimscore/errors.hpp"
#include "fimscore/numcore/dense_matrix.hpp"

namespace fimscore {

std::vector<double> finite_diff_grad(const ScalarFunction& f, std::span<const double> at, double h) {
  if (!(h > 0.0)) throw DomainError("finite_diff_grad: step must be positive");
  std::vector<double> x(at.begin(), at.end());
  std::vector<double> grad(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double saved = x[i];
    x[i] = saved + h;
    const double fp = f(x);
    x[i] = saved - h;
    const double fm = f(x);
    x[i] = saved;
    if (!std::isfinite(fp) || !std::isfinite(fm)) {
      throw NonFiniteError("finite_diff_grad: non-finite evaluation at coordinate " + std::to_string(i));
    }
    grad[i] = (fp - fm) / (2.0 * h);
  }
  return grad;
}

double relative_error(std::span<const double> approx, std::span<const double> reference) {
  return max_abs_diff(approx, reference) / std::max(1.0, max_abs(reference));
}

}  // namespace fimscore
