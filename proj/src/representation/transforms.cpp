#include "fimscore/representation/transforms.hpp"

#include <cmath>
#include <numbers>

#include "fimscore/errors.hpp"

namespace fimscore {

namespace {

template <typename... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};

double log_cosh(double x) {
  const double ax = std::abs(x);
  return ax + std::log1p(std::exp(-2.0 * ax)) - std::numbers::ln2;
}

void check_pixels(std::span<const double> x) {
  if (x.size() % 3 != 0) throw DimensionMismatch("rgb_hsv input (multiple of 3)", 3 * (x.size() / 3 + 1), x.size());
}

double det3(const std::array<double, 9>& m) {
  return m[0] * (m[4] * m[8] - m[5] * m[7]) - m[1] * (m[3] * m[8] - m[5] * m[6]) + m[2] * (m[3] * m[7] - m[4] * m[6]);
}

}  // namespace

InvertibleTransform::InvertibleTransform(Kind kind, bool inverted) : kind_(std::move(kind)), inverted_(inverted) {
  if (const auto* aff = std::get_if<AffineMap>(&kind_)) {
    if (aff->a.rows() != aff->a.cols() || aff->a.rows() != aff->b.size()) {
      throw DimensionMismatch("affine transform", aff->a.rows(), aff->b.size());
    }
    lu_ = std::make_shared<const LuDecomposition>(aff->a);
  }
  if (const auto* diag = std::get_if<DiagonalAffineMap>(&kind_)) {
    if (diag->scale.size() != diag->shift.size()) {
      throw DimensionMismatch("diagonal affine shift", diag->scale.size(), diag->shift.size());
    }
    for (double s : diag->scale)
      if (s == 0.0 || !std::isfinite(s)) throw DomainError("diagonal affine: scales must be finite and nonzero");
  }
}

InvertibleTransform InvertibleTransform::affine(DenseMatrix a, std::vector<double> b) {
  return InvertibleTransform(AffineMap{std::move(a), std::move(b)});
}

InvertibleTransform InvertibleTransform::scaling(std::size_t dim, double factor) {
  return InvertibleTransform(DiagonalAffineMap{std::vector<double>(dim, factor), std::vector<double>(dim, 0.0)});
}

std::string InvertibleTransform::name() const {
  std::string base = std::visit(Overloaded{
                                    [](const IdentityMap&) { return std::string("identity"); },
                                    [](const AffineMap&) { return std::string("affine"); },
                                    [](const DiagonalAffineMap&) { return std::string("diagonal_affine"); },
                                    [](const ElementwiseMap& e) {
                                      switch (e.fn) {
                                        case MonotoneFn::kSinh:
                                          return std::string("sinh");
                                        case MonotoneFn::kAsinh:
                                          return std::string("asinh");
                                        case MonotoneFn::kExp:
                                          return std::string("exp");
                                      }
                                      return std::string("elementwise");
                                    },
                                    [](const RgbHsvMap&) { return std::string("rgb_hsv"); },
                                },
                                kind_);
  return inverted_ ? "inverse_" + base : base;
}

std::vector<double> InvertibleTransform::forward(std::span<const double> x) const {
  return inverted_ ? base_inverse(x) : base_forward(x);
}

std::vector<double> InvertibleTransform::inverse(std::span<const double> t) const {
  return inverted_ ? base_forward(t) : base_inverse(t);
}

double InvertibleTransform::log_abs_det(std::span<const double> x) const {
  if (!inverted_) return base_log_abs_det(x);
  // d(T^-1)/dx at x is the inverse of dT/dt at t = T^-1(x).
  return -base_log_abs_det(base_inverse(x));
}

InvertibleTransform::Applied InvertibleTransform::apply_with_logdet(std::span<const double> x) const {
  return {forward(x), log_abs_det(x)};
}

std::vector<double> InvertibleTransform::base_forward(std::span<const double> x) const {
  return std::visit(
      Overloaded{
          [&](const IdentityMap&) { return std::vector<double>(x.begin(), x.end()); },
          [&](const AffineMap& m) {
            auto t = matvec(m.a, x);
            for (std::size_t i = 0; i < t.size(); ++i) t[i] += m.b[i];
            return t;
          },
          [&](const DiagonalAffineMap& m) {
            if (x.size() != m.scale.size()) throw DimensionMismatch("diagonal affine input", m.scale.size(), x.size());
            std::vector<double> t(x.size());
            for (std::size_t i = 0; i < x.size(); ++i) t[i] = m.scale[i] * x[i] + m.shift[i];
            return t;
          },
          [&](const ElementwiseMap& m) {
            std::vector<double> t(x.size());
            for (std::size_t i = 0; i < x.size(); ++i) {
              switch (m.fn) {
                case MonotoneFn::kSinh:
                  t[i] = std::sinh(x[i]);
                  break;
                case MonotoneFn::kAsinh:
                  t[i] = std::asinh(x[i]);
                  break;
                case MonotoneFn::kExp:
                  t[i] = std::exp(x[i]);
                  break;
              }
            }
            return t;
          },
          [&](const RgbHsvMap&) {
            check_pixels(x);
            std::vector<double> t(x.size());
            for (std::size_t p = 0; p < x.size(); p += 3) {
              const auto hsv = rgb_to_hsv_pixel(x.subspan(p, 3));
              std::copy(hsv.begin(), hsv.end(), t.begin() + static_cast<std::ptrdiff_t>(p));
            }
            return t;
          },
      },
      kind_);
}

std::vector<double> InvertibleTransform::base_inverse(std::span<const double> t) const {
  return std::visit(
      Overloaded{
          [&](const IdentityMap&) { return std::vector<double>(t.begin(), t.end()); },
          [&](const AffineMap& m) {
            std::vector<double> rhs(t.begin(), t.end());
            if (rhs.size() != m.b.size()) throw DimensionMismatch("affine inverse input", m.b.size(), rhs.size());
            for (std::size_t i = 0; i < rhs.size(); ++i) rhs[i] -= m.b[i];
            return lu_->solve(rhs);
          },
          [&](const DiagonalAffineMap& m) {
            if (t.size() != m.scale.size()) throw DimensionMismatch("diagonal affine input", m.scale.size(), t.size());
            std::vector<double> x(t.size());
            for (std::size_t i = 0; i < t.size(); ++i) x[i] = (t[i] - m.shift[i]) / m.scale[i];
            return x;
          },
          [&](const ElementwiseMap& m) {
            std::vector<double> x(t.size());
            for (std::size_t i = 0; i < t.size(); ++i) {
              switch (m.fn) {
                case MonotoneFn::kSinh:
                  x[i] = std::asinh(t[i]);
                  break;
                case MonotoneFn::kAsinh:
                  x[i] = std::sinh(t[i]);
                  break;
                case MonotoneFn::kExp:
                  if (!(t[i] > 0.0)) throw DomainError("exp transform inverse needs positive input");
                  x[i] = std::log(t[i]);
                  break;
              }
            }
            return x;
          },
          [&](const RgbHsvMap&) {
            check_pixels(t);
            std::vector<double> x(t.size());
            for (std::size_t p = 0; p < t.size(); p += 3) {
              const auto rgb = hsv_to_rgb_pixel(t.subspan(p, 3));
              std::copy(rgb.begin(), rgb.end(), x.begin() + static_cast<std::ptrdiff_t>(p));
            }
            return x;
          },
      },
      kind_);
}

double InvertibleTransform::base_log_abs_det(std::span<const double> x) const {
  return std::visit(Overloaded{
                        [&](const IdentityMap&) { return 0.0; },
                        [&](const AffineMap& m) {
                          if (x.size() != m.b.size()) throw DimensionMismatch("affine input", m.b.size(), x.size());
                          return lu_->log_abs_det();
                        },
                        [&](const DiagonalAffineMap& m) {
                          if (x.size() != m.scale.size()) {
                            throw DimensionMismatch("diagonal affine input", m.scale.size(), x.size());
                          }
                          double s = 0.0;
                          for (double v : m.scale) s += std::log(std::abs(v));
                          return s;
                        },
                        [&](const ElementwiseMap& m) {
                          double s = 0.0;
                          for (double v : x) {
                            switch (m.fn) {
                              case MonotoneFn::kSinh:
                                s += log_cosh(v);
                                break;
                              case MonotoneFn::kAsinh:
                                s -= 0.5 * std::log1p(v * v);
                                break;
                              case MonotoneFn::kExp:
                                s += v;
                                break;
                            }
                          }
                          return s;
                        },
                        [&](const RgbHsvMap&) {
                          check_pixels(x);
                          double s = 0.0;
                          for (std::size_t p = 0; p < x.size(); p += 3) s += rgb_hsv_log_det(x.subspan(p, 3));
                          return s;
                        },
                    },
                    kind_);
}

std::array<double, 3> rgb_to_hsv_pixel(std::span<const double> rgb) {
  const double r = rgb[0];
  const double g = rgb[1];
  const double b = rgb[2];
  const double mx = std::max({r, g, b});
  const double mn = std::min({r, g, b});
  const double delta = mx - mn;
  if (!(delta > 0.0)) throw SingularTransformError("rgb_to_hsv: gray pixel (max == min)");
  if (mx == 0.0) throw SingularTransformError("rgb_to_hsv: pixel with max == 0");
  double h = 0.0;
  if (mx == r) {
    h = (g - b) / (6.0 * delta);
    if (h < 0.0) h += 1.0;
  } else if (mx == g) {
    h = (b - r) / (6.0 * delta) + 1.0 / 3.0;
  } else {
    h = (r - g) / (6.0 * delta) + 2.0 / 3.0;
  }
  return {h, delta / mx, mx};
}

std::array<double, 3> hsv_to_rgb_pixel(std::span<const double> hsv) {
  const double h = hsv[0];
  const double s = hsv[1];
  const double v = hsv[2];
  const double h6 = 6.0 * (h - std::floor(h));
  const double sector = std::floor(h6);
  const double f = h6 - sector;
  const double p = v * (1.0 - s);
  const double q = v * (1.0 - s * f);
  const double t = v * (1.0 - s * (1.0 - f));
  switch (static_cast<int>(sector) % 6) {
    case 0:
      return {v, t, p};
    case 1:
      return {q, v, p};
    case 2:
      return {p, v, t};
    case 3:
      return {p, q, v};
    case 4:
      return {t, p, v};
    default:
      return {v, p, q};
  }
}

std::array<double, 9> rgb_hsv_jacobian(std::span<const double> rgb) {
  const double c[3] = {rgb[0], rgb[1], rgb[2]};
  std::size_t top = 0;
  if (c[1] > c[top]) top = 1;
  if (c[2] > c[top]) top = 2;
  // Same tie-breaking as rgb_to_hsv_pixel: r wins over g wins over b.
  if (c[0] == c[top]) top = 0;
  else if (c[1] == c[top]) top = 1;
  const double mx = c[top];
  const std::size_t low = (c[0] <= c[1] && c[0] <= c[2]) ? 0 : (c[1] <= c[2] ? 1 : 2);
  const double mn = c[low];
  const double delta = mx - mn;
  if (!(delta > 0.0)) throw SingularTransformError("rgb_hsv_jacobian: gray pixel (max == min)");
  if (mx == 0.0) throw SingularTransformError("rgb_hsv_jacobian: pixel with max == 0");

  std::array<double, 9> jac{};  // rows h, s, v; columns r, g, b
  // Hue in the region of channel `top`: h = (c[x] - c[y]) / (6 delta) + const,
  // with (x, y) the other two channels in cyclic order.
  const std::size_t x = (top + 1) % 3;
  const std::size_t y = (top + 2) % 3;
  const double num = c[x] - c[y];
  const double d2 = 6.0 * delta * delta;
  // delta = c[top] - c[low]; d delta / d c[top] = 1, d delta / d c[low] = -1.
  jac[top] = -num / d2;
  jac[x] = (delta - num * (x == low ? -1.0 : 0.0)) / d2;
  jac[y] = (-delta - num * (y == low ? -1.0 : 0.0)) / d2;
  // s = 1 - min / max.
  jac[3 + top] = mn / (mx * mx);
  jac[3 + low] = -1.0 / mx;
  // v = max.
  jac[6 + top] = 1.0;
  return jac;
}

double rgb_hsv_log_det(std::span<const double> rgb) {
  return std::log(std::abs(det3(rgb_hsv_jacobian(rgb))));
}

std::vector<double> dequantize(std::span<const double> pixels, Rng& rng) {
  std::vector<double> out(pixels.begin(), pixels.end());
  for (double& v : out) v += rng.normal() / 255.0;
  return out;
}

double delta_bpd(const InvertibleTransform& t, std::span<const double> x, std::size_t dims) {
  if (dims == 0) throw DomainError("delta_bpd: dims must be positive");
  return t.log_abs_det(x) / (static_cast<double>(dims) * std::numbers::ln2);
}

PushforwardModel::PushforwardModel(const Model& base, InvertibleTransform transform)
    : base_(base.clone()), transform_(std::move(transform)) {}

PushforwardModel::PushforwardModel(const PushforwardModel& other)
    : Model(other), base_(other.base_->clone()), transform_(other.transform_) {}

double PushforwardModel::log_likelihood(std::span<const double> t) const {
  check_dim(t);
  const auto x = transform_.inverse(t);
  return base_->log_likelihood(x) - transform_.log_abs_det(x);
}

double PushforwardModel::accumulate_score(std::span<const double> t, GradientVector& grad, double weight) const {
  check_dim(t);
  const auto x = transform_.inverse(t);
  // The volume term does not depend on theta and contributes no gradient.
  return base_->accumulate_score(x, grad, weight) - transform_.log_abs_det(x);
}

DenseMatrix PushforwardModel::sample(Rng& rng, std::size_t n) const {
  DenseMatrix xs = base_->sample(rng, n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto t = transform_.forward(xs.row(i));
    std::copy(t.begin(), t.end(), xs.row(i).begin());
  }
  return xs;
}

InvarianceCheck check_gradient_invariance(const Model& model, const InvertibleTransform& t,
                                          std::span<const double> x) {
  const auto applied = t.apply_with_logdet(x);
  const PushforwardModel pushed(model, t);

  auto grad_x = GradientVector::zeros_like(model.params());
  auto grad_t = GradientVector::zeros_like(model.params());
  InvarianceCheck res;
  res.loglik_x = model.accumulate_score(x, grad_x);
  res.loglik_t = pushed.accumulate_score(applied.value, grad_t);
  res.log_det = applied.log_det;
  res.max_grad_discrepancy = max_abs_diff(grad_t.flatten(), grad_x.flatten());
  res.value_gap_error = std::abs((res.loglik_x - res.loglik_t) - res.log_det);
  return res;
}

}  // namespace fimscore
