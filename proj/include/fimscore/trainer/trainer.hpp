#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <vector>

#include "fimscore/models/diag_gaussian.hpp"
#include "fimscore/models/model.hpp"
#include "fimscore/numcore/dense_matrix.hpp"

namespace fimscore {

struct TrainConfig {
  std::size_t epochs = 200;
  std::size_t batch_size = 50;
  double learning_rate = 1e-3;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  std::uint64_t seed = 0;
  double fit_fraction = 0.1;

  void validate() const;
};

struct TrainResult {
  std::unique_ptr<Model> model;
  DenseMatrix train_split;
  DenseMatrix fit_split;
  // Row indices into the input data.
  std::vector<std::size_t> train_indices;
  std::vector<std::size_t> fit_indices;
  double initial_mean_loglik = 0.0;
  // Mean train log-likelihood after each epoch.
  std::vector<double> loss_curve;
};

// Called before each update with the input-data row indices of the batch.
using BatchObserver = std::function<void(std::size_t epoch, std::size_t batch, std::span<const std::size_t> rows)>;

// Maximum-likelihood training by Adam ascent on the batch-mean log-likelihood.
//
// The data are shuffled once with the config seed; the last
// ceil(fit_fraction * n) shuffled rows become the held-out fit split and never
// reach an update. Train rows are reshuffled every epoch from the same seeded
// stream, so a run is a pure function of (model, data, config).
TrainResult train(const Model& model, const DenseMatrix& data, const TrainConfig& config,
                  const BatchObserver& observer = {});

double mean_log_likelihood(const Model& model, const DenseMatrix& data);

// mu = column mean, sigma^2 = biased (divide-by-n) column variance.
DiagGaussianModel analytic_mle_gaussian(const DenseMatrix& data);

}  // namespace fimscore
