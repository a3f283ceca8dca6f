#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "fimscore/numcore/rng.hpp"

namespace fimscore {

// |x_1| + sum_i |x_i - x_{i-1}|.
double tv(std::span<const double> x);

// Natural log of the volume of {x in R^d : tv(x) <= alpha}, d ln(2 alpha) - lgamma(d + 1).
double tv_log_volume(double alpha, std::size_t d);
double tv_log10_volume(double alpha, std::size_t d);

struct VolumeEstimate {
  double volume = 0.0;
  double std_error = 0.0;
  std::size_t hits = 0;
  std::size_t samples = 0;
};

// Hit-or-miss estimate with uniform points in the bounding box [-alpha, alpha]^d.
VolumeEstimate tv_volume_mc(double alpha, std::size_t d, std::size_t n, Rng& rng);

// Pixel visiting order for a rows x cols image stored row-major: walk column by
// column, downwards in even columns and upwards in odd ones, so consecutive
// entries are always neighbours. Entry k is the row-major index of the k-th pixel.
std::vector<std::size_t> snake_order(std::size_t rows, std::size_t cols);
std::vector<double> snake_flatten(std::span<const double> image, std::size_t rows, std::size_t cols);

}  // namespace fimscore
