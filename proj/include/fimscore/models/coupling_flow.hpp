#pragma once

#include <vector>

#include "fimscore/models/model.hpp"

namespace fimscore {

struct CouplingFlowHyper {
  std::size_t dim = 2;      // D, even
  std::size_t blocks = 6;   // K
  std::size_t hidden = 32;  // H
  double clamp = 5.0;       // c

  friend bool operator==(const CouplingFlowHyper&, const CouplingFlowHyper&) = default;
};

// RealNVP-style affine coupling flow with a standard normal base.
//
// Block k splits x into halves (a, b); a is the first half for even k and the
// second half for odd k. A one-hidden-layer tanh perceptron maps a to raw
// (s, t); the transformed half is b' = b * exp(c * tanh(s / c)) + t.
//
// Layers, four per block: block<k>.w_in [H, D/2], block<k>.b_in [H],
// block<k>.w_out [D, H] (rows 0..D/2-1 produce s, the rest t), block<k>.b_out [D].
class CouplingFlowModel final : public Model {
 public:
  static constexpr std::string_view kKind = "coupling_flow";

  // All parameters zero: the identity transform.
  explicit CouplingFlowModel(CouplingFlowHyper hyper);
  CouplingFlowModel(CouplingFlowHyper hyper, LayeredParams params);
  // Gaussian initialisation: input weights with std 1/sqrt(D/2), output
  // weights with std `output_scale`, zero biases.
  static CouplingFlowModel random(CouplingFlowHyper hyper, Rng& rng, double output_scale = 0.01);

  std::string_view kind() const override { return kKind; }
  std::size_t dim() const override { return hyper_.dim; }
  const LayeredParams& params() const override { return params_; }
  LayeredParams& mutable_params() override { return params_; }
  const CouplingFlowHyper& hyper() const { return hyper_; }

  double log_likelihood(std::span<const double> x) const override;
  double accumulate_score(std::span<const double> x, GradientVector& grad, double weight = 1.0) const override;
  DenseMatrix sample(Rng& rng, std::size_t n) const override;
  std::unique_ptr<Model> clone() const override { return std::make_unique<CouplingFlowModel>(*this); }

  struct ForwardResult {
    std::vector<double> z;
    double log_det = 0.0;
  };
  // Data space -> base space.
  ForwardResult forward(std::span<const double> x) const;
  // Base space -> data space.
  std::vector<double> inverse(std::span<const double> z) const;
  // Clamped log-scales c * tanh(s / c) of every block at x, block by block.
  std::vector<std::vector<double>> block_log_scales(std::span<const double> x) const;

 private:
  struct BlockCache;

  std::size_t half() const { return hyper_.dim / 2; }
  void conditioner(std::size_t block, std::span<const double> a, std::span<double> hidden,
                   std::span<double> out) const;
  void check_layout() const;

  CouplingFlowHyper hyper_;
  LayeredParams params_;
};

}  // namespace fimscore
