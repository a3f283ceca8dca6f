#pragma once

#include <string>

#include "fimscore/models/model.hpp"
#include "fimscore/numcore/dense_matrix.hpp"

namespace fimscore {

struct TypicalityModel {
  double h_hat = 0.0;  // mean held-out log-likelihood
  std::size_t n_fit = 0;
  std::string model_checksum;
};

// Negative mean log-likelihood of the batch.
double likelihood_score(const Model& model, const DenseMatrix& batch);

// h_hat = mean per-sample log-likelihood over the fit rows.
TypicalityModel fit_typicality(const Model& model, const DenseMatrix& fit_split);

// |mean batch log-likelihood - h_hat|.
double typicality_score(const TypicalityModel& tm, const Model& model, const DenseMatrix& batch);
double typicality_score(const TypicalityModel& tm, double batch_mean_loglik);

}  // namespace fimscore
