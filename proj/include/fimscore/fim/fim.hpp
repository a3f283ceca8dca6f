#pragma once

#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "fimscore/models/diag_gaussian.hpp"
#include "fimscore/models/model.hpp"
#include "fimscore/numcore/dense_matrix.hpp"
#include "fimscore/numcore/rng.hpp"

namespace fimscore {

inline constexpr std::size_t kDefaultWeightsPerLayer = 50;
// Two layers of at most kDefaultWeightsPerLayer weights each.
inline constexpr std::size_t kMaxSliceSize = 2 * kDefaultWeightsPerLayer;

struct WeightIndex {
  std::size_t layer = 0;
  std::size_t offset = 0;

  friend bool operator==(const WeightIndex&, const WeightIndex&) = default;
};

// Monte-Carlo Fisher information restricted to an ordered weight subset.
// Invariants (checked on construction): symmetric to 1e-10 and
// min eigenvalue >= -1e-8 * trace.
class FimSlice {
 public:
  FimSlice(DenseMatrix matrix, std::vector<WeightIndex> index, std::size_t n_samples);

  const DenseMatrix& matrix() const { return matrix_; }
  const std::vector<WeightIndex>& index() const { return index_; }
  std::size_t n_samples() const { return n_samples_; }
  std::size_t size() const { return index_.size(); }

 private:
  DenseMatrix matrix_;
  std::vector<WeightIndex> index_;
  std::size_t n_samples_;
};

void check_symmetric_psd(const DenseMatrix& m);

// Seeded uniform sample without replacement of min(cap, |theta_j|) weights
// from each listed layer, ascending within a layer.
std::vector<WeightIndex> select_weight_subset(const LayeredParams& params, std::span<const std::size_t> layers,
                                              Rng& rng, std::size_t cap = kDefaultWeightsPerLayer);

// (1/N) sum_i s_i s_i^T over N model samples, s_i the score restricted to `subset`.
FimSlice mc_fim_slice(const Model& model, Rng& rng, std::span<const WeightIndex> subset, std::size_t n_samples);

// C_ab = F_ab / sqrt(F_aa F_bb). Throws DomainError listing zero-diagonal rows.
DenseMatrix normalize_fim(const DenseMatrix& fim);
DenseMatrix normalize_fim(const FimSlice& slice);

struct DominanceStats {
  double diag_mean = 0.0;     // mean |C_aa|, 1 after normalisation
  double offdiag_mean = 0.0;  // mean |C_ab|, a != b

  double ratio() const {
    return offdiag_mean > 0.0 ? diag_mean / offdiag_mean : std::numeric_limits<double>::infinity();
  }
};

// Normalises `fim` and compares mean absolute diagonal and off-diagonal entries.
DominanceStats diag_dominance(const DenseMatrix& fim);

enum class ScoreTestMethod { kExactAnalytic, kDenseMc, kShermanMorrison };
std::string_view method_name(ScoreTestMethod m);

struct ScoreTestResult {
  double statistic = 0.0;
  std::size_t dof = 0;
  ScoreTestMethod method = ScoreTestMethod::kExactAnalytic;
};

// s^T F^-1 s with the analytic Gaussian Fisher information
// F^-1 = diag(sigma^2 .. , 1/2 ..):
//   sum_i (x_i - mu_i)^2 / sigma_i^2 + 0.5 ((x_i - mu_i)^2 / sigma_i^2 - 1)^2, dof = 2D.
ScoreTestResult exact_score_test_gaussian(const DiagGaussianModel& model, std::span<const double> x);

enum class ScaleConvention { kRaw, kNPlusOne };

// s_x^T A_N^-1 s_x with A_N = diag(a0) + sum_i S_i S_i^T (rows of
// grad_samples), by recursive Sherman-Morrison updates:
//   u_k = A_{k-1}^-1 S_k, A_k^-1 = A_{k-1}^-1 - u_k u_k^T / (1 + S_k^T u_k).
// Only the N vectors u_k are stored (O(N P) memory, no P x P matrix).
// kNPlusOne multiplies the result by N + 1, the inverse of the biased
// estimate F ~ A_N / (N + 1).
double sherman_morrison_score(std::span<const double> a0_diag, const DenseMatrix& grad_samples,
                              std::span<const double> s_x, ScaleConvention scale = ScaleConvention::kRaw);

// diag(sum_i S_i^2); coordinates where that sum is zero, and every coordinate
// when N = 0, fall back to 1.
std::vector<double> default_prior_diag(const DenseMatrix& grad_samples, std::size_t p);

// Same quadratic form through an explicit P x P matrix and solve_dense; P <= 64.
double dense_score_statistic(std::span<const double> a0_diag, const DenseMatrix& grad_samples,
                             std::span<const double> s_x, ScaleConvention scale = ScaleConvention::kRaw);

// Draws N model samples, stacks their full scores as S_i, uses the default
// prior and evaluates the score statistic of x.
ScoreTestResult mc_score_test(const Model& model, Rng& rng, std::span<const double> x, std::size_t n_samples,
                              ScoreTestMethod method = ScoreTestMethod::kShermanMorrison,
                              ScaleConvention scale = ScaleConvention::kRaw);

}  // namespace fimscore
