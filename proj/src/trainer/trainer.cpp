#include "fimscore/trainer/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "fimscore/errors.hpp"
#include "fimscore/numcore/rng.hpp"

namespace fimscore {

namespace {

class Adam {
 public:
  Adam(std::size_t size, const TrainConfig& cfg) : cfg_(cfg), m_(size, 0.0), v_(size, 0.0) {}

  // Ascent step: params += lr * mhat / (sqrt(vhat) + eps).
  void step(std::vector<double>& params, std::span<const double> grad) {
    ++t_;
    const double c1 = 1.0 - std::pow(cfg_.adam_beta1, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(cfg_.adam_beta2, static_cast<double>(t_));
    for (std::size_t i = 0; i < params.size(); ++i) {
      m_[i] = cfg_.adam_beta1 * m_[i] + (1.0 - cfg_.adam_beta1) * grad[i];
      v_[i] = cfg_.adam_beta2 * v_[i] + (1.0 - cfg_.adam_beta2) * grad[i] * grad[i];
      params[i] += cfg_.learning_rate * (m_[i] / c1) / (std::sqrt(v_[i] / c2) + cfg_.adam_eps);
    }
  }

 private:
  const TrainConfig& cfg_;
  std::vector<double> m_;
  std::vector<double> v_;
  std::size_t t_ = 0;
};

}  // namespace

void TrainConfig::validate() const {
  if (batch_size == 0) throw DomainError("train: batch_size must be >= 1");
  if (!(learning_rate > 0.0)) throw DomainError("train: learning_rate must be positive");
  if (!(adam_beta1 > 0.0 && adam_beta1 < 1.0)) throw DomainError("train: adam_beta1 must lie in (0, 1)");
  if (!(adam_beta2 > 0.0 && adam_beta2 < 1.0)) throw DomainError("train: adam_beta2 must lie in (0, 1)");
  if (!(adam_eps > 0.0)) throw DomainError("train: adam_eps must be positive");
  if (!(fit_fraction > 0.0 && fit_fraction < 1.0)) throw DomainError("train: fit_fraction must lie in (0, 1)");
}

double mean_log_likelihood(const Model& model, const DenseMatrix& data) {
  if (data.rows() == 0) throw InsufficientDataError("mean_log_likelihood: empty data");
  double s = 0.0;
  for (std::size_t i = 0; i < data.rows(); ++i) s += model.log_likelihood(data.row(i));
  return s / static_cast<double>(data.rows());
}

TrainResult train(const Model& model, const DenseMatrix& data, const TrainConfig& config,
                  const BatchObserver& observer) {
  config.validate();
  if (data.cols() != model.dim()) throw DimensionMismatch("train data", model.dim(), data.cols());
  const std::size_t n = data.rows();
  if (n < 2 * config.batch_size) {
    throw InsufficientDataError("train: need at least 2 * batch_size = " + std::to_string(2 * config.batch_size) +
                                " rows, got " + std::to_string(n));
  }
  Rng rng(config.seed);
  auto order = rng.permutation(n);
  const auto n_fit = static_cast<std::size_t>(std::ceil(config.fit_fraction * static_cast<double>(n)));
  if (n_fit == 0 || n_fit >= n) throw InsufficientDataError("train: fit split leaves no training rows");

  TrainResult res;
  res.train_indices.assign(order.begin(), order.end() - static_cast<std::ptrdiff_t>(n_fit));
  res.fit_indices.assign(order.end() - static_cast<std::ptrdiff_t>(n_fit), order.end());
  res.train_split = data.select_rows(res.train_indices);
  res.fit_split = data.select_rows(res.fit_indices);
  res.model = model.clone();

  Model& m = *res.model;
  res.initial_mean_loglik = mean_log_likelihood(m, res.train_split);

  const std::size_t n_train = res.train_indices.size();
  std::vector<double> flat = m.params().flatten();
  Adam adam(flat.size(), config);
  auto grad = GradientVector::zeros_like(m.params());
  std::vector<std::size_t> epoch_order(n_train);
  std::vector<std::size_t> batch_rows;

  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    for (std::size_t i = 0; i < n_train; ++i) epoch_order[i] = i;
    rng.shuffle(std::span<std::size_t>(epoch_order));
    std::size_t batch = 0;
    for (std::size_t start = 0; start < n_train; start += config.batch_size, ++batch) {
      const std::size_t end = std::min(n_train, start + config.batch_size);
      batch_rows.clear();
      for (std::size_t i = start; i < end; ++i) batch_rows.push_back(res.train_indices[epoch_order[i]]);
      if (observer) observer(epoch, batch, batch_rows);

      grad.set_zero();
      const double w = 1.0 / static_cast<double>(end - start);
      double ll = 0.0;
      for (std::size_t i = start; i < end; ++i) ll += m.accumulate_score(res.train_split.row(epoch_order[i]), grad, w);
      if (!std::isfinite(ll) || !grad.all_finite()) {
        throw NonFiniteError("train: non-finite loss at epoch " + std::to_string(epoch) + ", batch " +
                             std::to_string(batch));
      }
      adam.step(flat, grad.flatten());
      m.mutable_params().assign_flat(flat);
    }
    const double mean_ll = mean_log_likelihood(m, res.train_split);
    if (!std::isfinite(mean_ll)) {
      throw NonFiniteError("train: non-finite mean log-likelihood after epoch " + std::to_string(epoch) +
                           " (batch " + std::to_string(batch) + ")");
    }
    res.loss_curve.push_back(mean_ll);
  }
  return res;
}

DiagGaussianModel analytic_mle_gaussian(const DenseMatrix& data) {
  const std::size_t n = data.rows();
  const std::size_t d = data.cols();
  if (n < 2) throw InsufficientDataError("analytic_mle_gaussian: need at least 2 rows");
  std::vector<double> mu(d, 0.0);
  std::vector<double> log_sigma(d, 0.0);
  for (std::size_t j = 0; j < d; ++j) {
    double mean = 0.0;
    for (std::size_t i = 0; i < n; ++i) mean += data(i, j);
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (std::size_t i = 0; i < n; ++i) var += (data(i, j) - mean) * (data(i, j) - mean);
    var /= static_cast<double>(n);
    if (!(var > 0.0)) throw DegenerateDataError("analytic_mle_gaussian: zero variance in dimension " + std::to_string(j));
    mu[j] = mean;
    log_sigma[j] = 0.5 * std::log(var);
  }
  return DiagGaussianModel(std::move(mu), std::move(log_sigma));
}

}  // namespace fimscore
