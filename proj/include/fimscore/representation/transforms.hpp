#pragma once

#include <array>
#include <memory>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "fimscore/models/model.hpp"
#include "fimscore/numcore/dense_matrix.hpp"

namespace fimscore {

struct IdentityMap {};

// t = A x + b with A invertible.
struct AffineMap {
  DenseMatrix a;
  std::vector<double> b;
};

// t_i = scale_i * x_i + shift_i; the cheap form of a diagonal affine map.
struct DiagonalAffineMap {
  std::vector<double> scale;
  std::vector<double> shift;
};

enum class MonotoneFn { kSinh, kAsinh, kExp };

struct ElementwiseMap {
  MonotoneFn fn = MonotoneFn::kSinh;
};

// Pixelwise RGB -> HSV on consecutive (r, g, b) triples; hue in [0, 1).
struct RgbHsvMap {};

// An invertible data transform T with exact log |det dT/dx|. `inverted`
// swaps the roles of forward and inverse.
class InvertibleTransform {
 public:
  using Kind = std::variant<IdentityMap, AffineMap, DiagonalAffineMap, ElementwiseMap, RgbHsvMap>;

  explicit InvertibleTransform(Kind kind, bool inverted = false);

  static InvertibleTransform identity() { return InvertibleTransform(IdentityMap{}); }
  static InvertibleTransform affine(DenseMatrix a, std::vector<double> b);
  static InvertibleTransform scaling(std::size_t dim, double factor);
  static InvertibleTransform elementwise(MonotoneFn fn) { return InvertibleTransform(ElementwiseMap{fn}); }
  static InvertibleTransform rgb_to_hsv() { return InvertibleTransform(RgbHsvMap{}); }

  InvertibleTransform inverse_transform() const { return InvertibleTransform(kind_, !inverted_); }

  std::string name() const;
  bool inverted() const { return inverted_; }

  std::vector<double> forward(std::span<const double> x) const;
  std::vector<double> inverse(std::span<const double> t) const;
  // log |det dT/dx| at x.
  double log_abs_det(std::span<const double> x) const;

  struct Applied {
    std::vector<double> value;
    double log_det = 0.0;
  };
  Applied apply_with_logdet(std::span<const double> x) const;

 private:
  std::vector<double> base_forward(std::span<const double> x) const;
  std::vector<double> base_inverse(std::span<const double> t) const;
  double base_log_abs_det(std::span<const double> x) const;

  Kind kind_;
  bool inverted_ = false;
  std::shared_ptr<const LuDecomposition> lu_;  // affine only
};

// Single pixel RGB -> HSV and back.
std::array<double, 3> rgb_to_hsv_pixel(std::span<const double> rgb);
std::array<double, 3> hsv_to_rgb_pixel(std::span<const double> hsv);
// Analytic 3 x 3 Jacobian d(h, s, v) / d(r, g, b), row-major, derived per hue
// region (which channel is the max, which the min). Throws
// SingularTransformError on gray pixels (max == min) or max == 0.
std::array<double, 9> rgb_hsv_jacobian(std::span<const double> rgb);
// log |det| of the pixel Jacobian, equal to -ln(6 |max| (max - min)).
double rgb_hsv_log_det(std::span<const double> rgb);

// Adds N(0, 1) / 255 noise to every value.
std::vector<double> dequantize(std::span<const double> pixels, Rng& rng);

// (1 / dims) log2 |det dT/dx| at x: the bits-per-dimension gap between the
// densities of the same data in the two representations.
double delta_bpd(const InvertibleTransform& t, std::span<const double> x, std::size_t dims);

// The density of T(X) for X ~ base: log p_T(t) = log p_X(T^-1 t) - log|det dT/dx|.
// Shares the base model's parameters, so its score is a gradient w.r.t. the
// same theta.
class PushforwardModel final : public Model {
 public:
  PushforwardModel(const Model& base, InvertibleTransform transform);
  PushforwardModel(const PushforwardModel& other);

  std::string_view kind() const override { return "pushforward"; }
  std::size_t dim() const override { return base_->dim(); }
  const LayeredParams& params() const override { return base_->params(); }
  LayeredParams& mutable_params() override { return base_->mutable_params(); }

  double log_likelihood(std::span<const double> t) const override;
  double accumulate_score(std::span<const double> t, GradientVector& grad, double weight = 1.0) const override;
  DenseMatrix sample(Rng& rng, std::size_t n) const override;
  std::unique_ptr<Model> clone() const override { return std::make_unique<PushforwardModel>(*this); }

  const InvertibleTransform& transform() const { return transform_; }

 private:
  std::unique_ptr<Model> base_;
  InvertibleTransform transform_;
};

struct InvarianceCheck {
  double max_grad_discrepancy = 0.0;  // max |grad log p_T(T x) - grad log p_X(x)|
  double loglik_x = 0.0;
  double loglik_t = 0.0;
  double log_det = 0.0;
  double value_gap_error = 0.0;  // |(loglik_x - loglik_t) - log_det|
};

// Builds the pushed-forward density as a function of theta with x fixed and
// compares its theta-gradient at T(x) with the base model's at x.
InvarianceCheck check_gradient_invariance(const Model& model, const InvertibleTransform& t,
                                          std::span<const double> x);

}  // namespace fimscore
