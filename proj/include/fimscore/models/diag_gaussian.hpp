#pragma once

#include <vector>

#include "fimscore/models/model.hpp"

namespace fimscore {

// Diagonal Gaussian N(mu, diag(exp(2 log_sigma))). Layers: "mu", "log_sigma".
class DiagGaussianModel final : public Model {
 public:
  static constexpr std::string_view kKind = "diag_gaussian";

  DiagGaussianModel(std::vector<double> mu, std::vector<double> log_sigma);
  explicit DiagGaussianModel(LayeredParams params);
  // Standard normal in `dim` dimensions.
  static DiagGaussianModel standard(std::size_t dim);

  std::string_view kind() const override { return kKind; }
  std::size_t dim() const override { return params_.values(0).size(); }
  const LayeredParams& params() const override { return params_; }
  LayeredParams& mutable_params() override { return params_; }

  std::span<const double> mu() const { return params_.values(0); }
  std::span<const double> log_sigma() const { return params_.values(1); }
  double sigma(std::size_t i) const;

  double log_likelihood(std::span<const double> x) const override;
  double accumulate_score(std::span<const double> x, GradientVector& grad, double weight = 1.0) const override;
  DenseMatrix sample(Rng& rng, std::size_t n) const override;
  std::unique_ptr<Model> clone() const override { return std::make_unique<DiagGaussianModel>(*this); }

 private:
  LayeredParams params_;
};

}  // namespace fimscore
