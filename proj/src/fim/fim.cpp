#include "fimscore/fim/fim.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "fimscore/errors.hpp"

namespace fimscore {

namespace {
constexpr std::size_t kDenseLimit = 64;
}

FimSlice::FimSlice(DenseMatrix matrix, std::vector<WeightIndex> index, std::size_t n_samples)
    : matrix_(std::move(matrix)), index_(std::move(index)), n_samples_(n_samples) {
  if (matrix_.rows() != index_.size() || matrix_.cols() != index_.size()) {
    throw DimensionMismatch("FimSlice matrix", index_.size(), matrix_.rows());
  }
  check_symmetric_psd(matrix_);
}

void check_symmetric_psd(const DenseMatrix& m) {
  if (m.rows() != m.cols()) throw DimensionMismatch("FIM slice must be square", m.rows(), m.cols());
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = i + 1; j < m.cols(); ++j)
      if (std::abs(m(i, j) - m(j, i)) > 1e-10) {
        throw DomainError("FIM slice not symmetric at (" + std::to_string(i) + ", " + std::to_string(j) + ")");
      }
  if (m.rows() == 0) return;
  const double min_eig = symmetric_eigenvalues(m).front();
  if (min_eig < -1e-8 * m.trace()) {
    throw DomainError("FIM slice not positive semi-definite: min eigenvalue " + std::to_string(min_eig));
  }
}

std::vector<WeightIndex> select_weight_subset(const LayeredParams& params, std::span<const std::size_t> layers,
                                              Rng& rng, std::size_t cap) {
  std::vector<WeightIndex> subset;
  for (std::size_t layer : layers) {
    if (layer >= params.layer_count()) throw DomainError("select_weight_subset: no layer " + std::to_string(layer));
    const std::size_t size = params.values(layer).size();
    for (std::size_t off : rng.sample_without_replacement(size, std::min(cap, size))) subset.push_back({layer, off});
  }
  return subset;
}

FimSlice mc_fim_slice(const Model& model, Rng& rng, std::span<const WeightIndex> subset, std::size_t n_samples) {
  if (n_samples == 0) throw DomainError("mc_fim_slice: N must be >= 1");
  const std::size_t m = subset.size();
  if (m == 0 || m > kMaxSliceSize) {
    throw DomainError("mc_fim_slice: subset size must be in [1, " + std::to_string(kMaxSliceSize) + "], got " +
                      std::to_string(m));
  }
  for (const auto& w : subset) {
    if (w.layer >= model.params().layer_count() || w.offset >= model.params().values(w.layer).size()) {
      throw DomainError("mc_fim_slice: weight index out of range");
    }
  }
  const DenseMatrix draws = model.sample(rng, n_samples);
  DenseMatrix fim(m, m);
  std::vector<double> s(m);
  auto grad = GradientVector::zeros_like(model.params());
  for (std::size_t i = 0; i < n_samples; ++i) {
    grad.set_zero();
    model.accumulate_score(draws.row(i), grad);
    for (std::size_t a = 0; a < m; ++a) s[a] = grad.layer(subset[a].layer)[subset[a].offset];
    for (std::size_t a = 0; a < m; ++a)
      for (std::size_t b = a; b < m; ++b) fim(a, b) += s[a] * s[b];
  }
  const double inv_n = 1.0 / static_cast<double>(n_samples);
  for (std::size_t a = 0; a < m; ++a)
    for (std::size_t b = a; b < m; ++b) {
      fim(a, b) *= inv_n;
      fim(b, a) = fim(a, b);
    }
  return FimSlice(std::move(fim), std::vector<WeightIndex>(subset.begin(), subset.end()), n_samples);
}

DenseMatrix normalize_fim(const DenseMatrix& fim) {
  if (fim.rows() != fim.cols()) throw DimensionMismatch("normalize_fim", fim.rows(), fim.cols());
  const std::size_t m = fim.rows();
  std::string bad;
  std::vector<double> root(m);
  for (std::size_t a = 0; a < m; ++a) {
    if (!(fim(a, a) > 0.0)) bad += (bad.empty() ? "" : ", ") + std::to_string(a);
    root[a] = std::sqrt(fim(a, a));
  }
  if (!bad.empty()) throw DomainError("normalize_fim: non-positive diagonal at rows " + bad);
  DenseMatrix c(m, m);
  for (std::size_t a = 0; a < m; ++a)
    for (std::size_t b = 0; b < m; ++b) c(a, b) = a == b ? 1.0 : fim(a, b) / (root[a] * root[b]);
  return c;
}

DenseMatrix normalize_fim(const FimSlice& slice) {
  try {
    return normalize_fim(slice.matrix());
  } catch (const DomainError&) {
    std::string bad;
    for (std::size_t a = 0; a < slice.size(); ++a) {
      if (!(slice.matrix()(a, a) > 0.0)) {
        bad += (bad.empty() ? "" : ", ") + std::string("layer ") + std::to_string(slice.index()[a].layer) +
               " offset " + std::to_string(slice.index()[a].offset);
      }
    }
    throw DomainError("normalize_fim: zero diagonal for weights " + bad);
  }
}

DominanceStats diag_dominance(const DenseMatrix& fim) {
  if (fim.rows() < 2) throw DomainError("diag_dominance: need at least a 2 x 2 matrix");
  const DenseMatrix c = normalize_fim(fim);
  const std::size_t m = c.rows();
  DominanceStats st;
  for (std::size_t a = 0; a < m; ++a) {
    st.diag_mean += std::abs(c(a, a));
    for (std::size_t b = 0; b < m; ++b)
      if (a != b) st.offdiag_mean += std::abs(c(a, b));
  }
  st.diag_mean /= static_cast<double>(m);
  st.offdiag_mean /= static_cast<double>(m * (m - 1));
  return st;
}

std::string_view method_name(ScoreTestMethod m) {
  switch (m) {
    case ScoreTestMethod::kExactAnalytic:
      return "exact_analytic";
    case ScoreTestMethod::kDenseMc:
      return "dense_mc";
    case ScoreTestMethod::kShermanMorrison:
      return "sherman_morrison";
  }
  return "exact_analytic";
}

ScoreTestResult exact_score_test_gaussian(const DiagGaussianModel& model, std::span<const double> x) {
  if (x.size() != model.dim()) throw DimensionMismatch("exact_score_test_gaussian", model.dim(), x.size());
  double stat = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double u = x[i] - model.mu()[i];
    const double z2 = u * u * std::exp(-2.0 * model.log_sigma()[i]);
    stat += z2 + 0.5 * (z2 - 1.0) * (z2 - 1.0);
  }
  return {stat, 2 * model.dim(), ScoreTestMethod::kExactAnalytic};
}

double sherman_morrison_score(std::span<const double> a0_diag, const DenseMatrix& grad_samples,
                              std::span<const double> s_x, ScaleConvention scale) {
  const std::size_t p = a0_diag.size();
  const std::size_t n = grad_samples.rows();
  if (s_x.size() != p) throw DimensionMismatch("sherman_morrison_score s_x", p, s_x.size());
  if (n > 0 && grad_samples.cols() != p) throw DimensionMismatch("sherman_morrison_score samples", p, grad_samples.cols());
  for (std::size_t i = 0; i < p; ++i) {
    if (!(a0_diag[i] > 0.0)) throw DomainError("sherman_morrison_score: a0 entry " + std::to_string(i) + " is not positive");
  }

  // u[k] = A_{k-1}^-1 S_k, stored row-wise; denom[k] = 1 + S_k^T u_k.
  std::vector<double> u(n * p);
  std::vector<double> denom(n);
  for (std::size_t k = 0; k < n; ++k) {
    const auto sk = grad_samples.row(k);
    std::span<double> uk(u.data() + k * p, p);
    for (std::size_t i = 0; i < p; ++i) uk[i] = sk[i] / a0_diag[i];
    for (std::size_t m = 0; m < k; ++m) {
      std::span<const double> um(u.data() + m * p, p);
      const double coef = dot(um, sk) / denom[m];
      for (std::size_t i = 0; i < p; ++i) uk[i] -= coef * um[i];
    }
    denom[k] = 1.0 + dot(sk, uk);
  }

  double q = 0.0;
  for (std::size_t i = 0; i < p; ++i) q += s_x[i] * s_x[i] / a0_diag[i];
  for (std::size_t m = 0; m < n; ++m) {
    const double proj = dot(std::span<const double>(u.data() + m * p, p), s_x);
    q -= proj * proj / denom[m];
  }
  if (scale == ScaleConvention::kNPlusOne) q *= static_cast<double>(n + 1);
  return q;
}

std::vector<double> default_prior_diag(const DenseMatrix& grad_samples, std::size_t p) {
  std::vector<double> a0(p, 0.0);
  for (std::size_t k = 0; k < grad_samples.rows(); ++k) {
    const auto sk = grad_samples.row(k);
    for (std::size_t i = 0; i < p; ++i) a0[i] += sk[i] * sk[i];
  }
  for (double& v : a0)
    if (!(v > 0.0)) v = 1.0;
  return a0;
}

double dense_score_statistic(std::span<const double> a0_diag, const DenseMatrix& grad_samples,
                             std::span<const double> s_x, ScaleConvention scale) {
  const std::size_t p = a0_diag.size();
  if (p > kDenseLimit) throw DomainError("dense_score_statistic: P must be <= 64");
  DenseMatrix a = DenseMatrix::diagonal(a0_diag);
  for (std::size_t k = 0; k < grad_samples.rows(); ++k) {
    const auto sk = grad_samples.row(k);
    for (std::size_t i = 0; i < p; ++i)
      for (std::size_t j = 0; j < p; ++j) a(i, j) += sk[i] * sk[j];
  }
  double q = dot(s_x, solve_dense(a, s_x));
  if (scale == ScaleConvention::kNPlusOne) q *= static_cast<double>(grad_samples.rows() + 1);
  return q;
}

ScoreTestResult mc_score_test(const Model& model, Rng& rng, std::span<const double> x, std::size_t n_samples,
                              ScoreTestMethod method, ScaleConvention scale) {
  const std::size_t p = model.params().total_size();
  const DenseMatrix draws = model.sample(rng, n_samples);
  DenseMatrix samples(n_samples, p);
  for (std::size_t i = 0; i < n_samples; ++i) {
    const auto s = model.score(draws.row(i)).flatten();
    std::copy(s.begin(), s.end(), samples.row(i).begin());
  }
  const auto s_x = model.score(x).flatten();
  const auto a0 = default_prior_diag(samples, p);
  ScoreTestResult res;
  res.dof = p;
  res.method = method;
  switch (method) {
    case ScoreTestMethod::kShermanMorrison:
      res.statistic = sherman_morrison_score(a0, samples, s_x, scale);
      break;
    case ScoreTestMethod::kDenseMc:
      res.statistic = dense_score_statistic(a0, samples, s_x, scale);
      break;
    case ScoreTestMethod::kExactAnalytic:
      throw DomainError("mc_score_test: exact_analytic is only available for diag_gaussian models");
  }
  return res;
}

}  // namespace fimscore
