#pragma once

#include <functional>
#include <span>
#include <vector>

namespace fimscore {

using ScalarFunction = std::function<double(std::span<const double>)>;

// Central differences (f(x + h e_i) - f(x - h e_i)) / 2h per coordinate.
// Throws NonFiniteError if any evaluation is not finite.
std::vector<double> finite_diff_grad(const ScalarFunction& f, std::span<const double> at, double h);

// max_i |a_i - b_i| / max(1, max_i |b_i|); the relative metric used by the
// gradient-oracle checks.
double relative_error(std::span<const double> approx, std::span<const double> reference);

}  // namespace fimscore
