#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <string>
#include <string_view>

#include "fimscore/models/layered_params.hpp"
#include "fimscore/numcore/dense_matrix.hpp"
#include "fimscore/numcore/rng.hpp"

namespace fimscore {

// A likelihood-based generative model with exact log-density, analytic
// parameter gradients and ancestral sampling.
//
// Inference methods are const and reentrant. Parameters change only through
// mutable_params(), which the trainer owns.
class Model {
 public:
  virtual ~Model() = default;

  virtual std::string_view kind() const = 0;
  virtual std::size_t dim() const = 0;

  virtual const LayeredParams& params() const = 0;
  virtual LayeredParams& mutable_params() = 0;

  virtual double log_likelihood(std::span<const double> x) const = 0;

  // Adds weight * grad_theta log p(x) into `grad` and returns log p(x).
  virtual double accumulate_score(std::span<const double> x, GradientVector& grad,
                                  double weight = 1.0) const = 0;

  virtual DenseMatrix sample(Rng& rng, std::size_t n) const = 0;

  virtual std::unique_ptr<Model> clone() const = 0;

  GradientVector score(std::span<const double> x) const;

  // Hex FNV-1a digest over kind, layer names, shapes and parameter bytes.
  std::string checksum() const;

 protected:
  void check_dim(std::span<const double> x) const;
};

// Monte-Carlo mean of the score over n model samples.
GradientVector expected_score_mc(const Model& model, Rng& rng, std::size_t n);

}  // namespace fimscore
