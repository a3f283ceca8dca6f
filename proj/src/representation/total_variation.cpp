#include "fimscore/representation/total_variation.hpp"

#include <cmath>
#include <numbers>

#include "fimscore/errors.hpp"
#include "fimscore/numcore/special.hpp"

namespace fimscore {

double tv(std::span<const double> x) {
  if (x.empty()) throw DomainError("tv: empty vector");
  double s = std::abs(x[0]);
  for (std::size_t i = 1; i < x.size(); ++i) s += std::abs(x[i] - x[i - 1]);
  return s;
}

double tv_log_volume(double alpha, std::size_t d) {
  if (!(alpha > 0.0) || !std::isfinite(alpha)) throw DomainError("tv_log_volume: alpha must be positive");
  if (d == 0) throw DomainError("tv_log_volume: d must be at least 1");
  const double dd = static_cast<double>(d);
  return dd * std::log(2.0 * alpha) - fimscore::lgamma(dd + 1.0);
}

double tv_log10_volume(double alpha, std::size_t d) { return tv_log_volume(alpha, d) / std::numbers::ln10; }

VolumeEstimate tv_volume_mc(double alpha, std::size_t d, std::size_t n, Rng& rng) {
  if (!(alpha > 0.0)) throw DomainError("tv_volume_mc: alpha must be positive");
  if (d == 0 || n == 0) throw DomainError("tv_volume_mc: d and n must be positive");
  std::vector<double> x(d);
  std::size_t hits = 0;
  for (std::size_t i = 0; i < n; ++i) {
    for (double& v : x) v = rng.uniform(-alpha, alpha);
    if (tv(x) <= alpha) ++hits;
  }
  const double box = std::pow(2.0 * alpha, static_cast<double>(d));
  const double p = static_cast<double>(hits) / static_cast<double>(n);
  VolumeEstimate est;
  est.volume = box * p;
  est.std_error = box * std::sqrt(p * (1.0 - p) / static_cast<double>(n));
  est.hits = hits;
  est.samples = n;
  return est;
}

std::vector<std::size_t> snake_order(std::size_t rows, std::size_t cols) {
  std::vector<std::size_t> order;
  order.reserve(rows * cols);
  for (std::size_t j = 0; j < cols; ++j) {
    for (std::size_t k = 0; k < rows; ++k) {
      const std::size_t i = (j % 2 == 0) ? k : rows - 1 - k;
      order.push_back(i * cols + j);
    }
  }
  return order;
}

std::vector<double> snake_flatten(std::span<const double> image, std::size_t rows, std::size_t cols) {
  if (image.size() != rows * cols) throw DimensionMismatch("snake_flatten image", rows * cols, image.size());
  std::vector<double> out;
  out.reserve(image.size());
  for (std::size_t idx : snake_order(rows, cols)) out.push_back(image[idx]);
  return out;
}

}  // namespace fimscore
