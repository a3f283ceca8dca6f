#include "fimscore/baselines/baselines.hpp"

#include <cmath>

#include "fimscore/errors.hpp"
#include "fimscore/trainer/trainer.hpp"

namespace fimscore {

double likelihood_score(const Model& model, const DenseMatrix& batch) {
  if (batch.rows() == 0) throw InsufficientDataError("likelihood_score: empty batch");
  return -mean_log_likelihood(model, batch);
}

TypicalityModel fit_typicality(const Model& model, const DenseMatrix& fit_split) {
  if (fit_split.rows() == 0) throw InsufficientDataError("fit_typicality: empty fit split");
  const double h = mean_log_likelihood(model, fit_split);
  if (!std::isfinite(h)) throw NonFiniteError("fit_typicality: non-finite mean log-likelihood");
  return {h, fit_split.rows(), model.checksum()};
}

double typicality_score(const TypicalityModel& tm, double batch_mean_loglik) {
  return std::abs(batch_mean_loglik - tm.h_hat);
}

double typicality_score(const TypicalityModel& tm, const Model& model, const DenseMatrix& batch) {
  if (batch.rows() == 0) throw InsufficientDataError("typicality_score: empty batch");
  return typicality_score(tm, mean_log_likelihood(model, batch));
}

}  // namespace fimscore
