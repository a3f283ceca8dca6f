#include "fimscore/models/diag_gaussian.hpp"

#include <cmath>

#include "fimscore/errors.hpp"
#include "fimscore/numcore/special.hpp"

namespace fimscore {

namespace {

LayeredParams make_params(std::vector<double> mu, std::vector<double> log_sigma) {
  if (mu.size() != log_sigma.size()) throw DimensionMismatch("DiagGaussian log_sigma", mu.size(), log_sigma.size());
  const std::size_t d = mu.size();
  return LayeredParams({Layer{"mu", {d}, std::move(mu)}, Layer{"log_sigma", {d}, std::move(log_sigma)}});
}

}  // namespace

DiagGaussianModel::DiagGaussianModel(std::vector<double> mu, std::vector<double> log_sigma)
    : params_(make_params(std::move(mu), std::move(log_sigma))) {}

DiagGaussianModel::DiagGaussianModel(LayeredParams params) : params_(std::move(params)) {
  if (params_.layer_count() != 2 || params_.layer(0).name != "mu" || params_.layer(1).name != "log_sigma") {
    throw DomainError("diag_gaussian expects layers [mu, log_sigma]");
  }
  if (params_.values(0).size() != params_.values(1).size()) {
    throw DimensionMismatch("diag_gaussian log_sigma", params_.values(0).size(), params_.values(1).size());
  }
}

DiagGaussianModel DiagGaussianModel::standard(std::size_t dim) {
  return DiagGaussianModel(std::vector<double>(dim, 0.0), std::vector<double>(dim, 0.0));
}

double DiagGaussianModel::sigma(std::size_t i) const { return std::exp(log_sigma()[i]); }

double DiagGaussianModel::log_likelihood(std::span<const double> x) const {
  check_dim(x);
  const auto m = mu();
  const auto ls = log_sigma();
  double ll = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double z = (x[i] - m[i]) * std::exp(-ls[i]);
    ll += -kHalfLog2Pi - ls[i] - 0.5 * z * z;
  }
  return ll;
}

double DiagGaussianModel::accumulate_score(std::span<const double> x, GradientVector& grad, double weight) const {
  check_dim(x);
  const auto m = mu();
  const auto ls = log_sigma();
  auto g_mu = grad.layer(0);
  auto g_ls = grad.layer(1);
  double ll = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double inv_var = std::exp(-2.0 * ls[i]);
    const double u = x[i] - m[i];
    const double z2 = u * u * inv_var;
    g_mu[i] += weight * u * inv_var;
    g_ls[i] += weight * (z2 - 1.0);
    ll += -kHalfLog2Pi - ls[i] - 0.5 * z2;
  }
  return ll;
}

DenseMatrix DiagGaussianModel::sample(Rng& rng, std::size_t n) const {
  const std::size_t d = dim();
  DenseMatrix out(n, d);
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t i = 0; i < d; ++i) out(r, i) = mu()[i] + sigma(i) * rng.normal();
  return out;
}

}  // namespace fimscore
