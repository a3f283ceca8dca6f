#include <gtest/gtest.h>

#include <cmath>

#include "fimscore/baselines/baselines.hpp"
#include "fimscore/errors.hpp"
#include "fimscore/gradfeatures/features.hpp"
#include "fimscore/models/coupling_flow.hpp"
#include "fimscore/models/diag_gaussian.hpp"
#include "fimscore/representation/transforms.hpp"

using namespace fimscore;

TEST(LikelihoodScore, Examples) {
  const auto m = DiagGaussianModel::standard(1);
  EXPECT_NEAR(likelihood_score(m, DenseMatrix{{0.0}}), 0.9189385332046727, 1e-12);
  const DenseMatrix one{{0.7, -1.1}};
  const DenseMatrix twice{{0.7, -1.1}, {0.7, -1.1}};
  const auto m2 = DiagGaussianModel({0.2, 0.1}, {0.3, -0.2});
  EXPECT_DOUBLE_EQ(likelihood_score(m2, one), likelihood_score(m2, twice));
  EXPECT_THROW(likelihood_score(m2, DenseMatrix(0, 2)), InsufficientDataError);
}

TEST(Typicality, EntropyEstimate) {
  const auto m = DiagGaussianModel::standard(1);
  Rng rng(1);
  const auto fit = m.sample(rng, 100000);
  const auto tm = fit_typicality(m, fit);
  EXPECT_NEAR(tm.h_hat, -0.5 * std::log(2 * M_PI) - 0.5, 0.01);
  EXPECT_EQ(tm.n_fit, 100000u);
  EXPECT_EQ(tm.model_checksum, m.checksum());
  EXPECT_THROW(fit_typicality(m, DenseMatrix(0, 1)), InsufficientDataError);
}

TEST(Typicality, DistanceFromEntropy) {
  TypicalityModel tm{-3.0, 10, ""};
  EXPECT_DOUBLE_EQ(typicality_score(tm, -5.0), 2.0);
  EXPECT_DOUBLE_EQ(typicality_score(tm, -1.0), 2.0);
  EXPECT_DOUBLE_EQ(typicality_score(tm, -3.0), 0.0);
  const auto m = DiagGaussianModel::standard(1);
  const TypicalityModel at{-0.5 * std::log(2 * M_PI), 1, ""};
  EXPECT_DOUBLE_EQ(typicality_score(at, m, DenseMatrix{{1.0}}), 0.5);
}

TEST(Baselines, AffineReexpressionMovesLikelihoodNotGradients) {
  Rng rng(2);
  const auto base = CouplingFlowModel::random(CouplingFlowHyper{2, 2, 8, 5.0}, rng, 0.3);
  const auto t = InvertibleTransform::affine(DenseMatrix{{2.0, 0.5}, {0.0, 3.0}}, {1.0, -1.0});
  const PushforwardModel pushed(base, t);
  const auto x = base.sample(rng, 5);
  DenseMatrix tx(5, 2);
  for (std::size_t i = 0; i < 5; ++i) {
    const auto v = t.forward(x.row(i));
    tx(i, 0) = v[0];
    tx(i, 1) = v[1];
  }
  // log |det A| = log 6 for every point.
  EXPECT_NEAR(likelihood_score(pushed, tx) - likelihood_score(base, x), std::log(6.0), 1e-10);
  const auto fa = gradient_features(base, x);
  const auto fb = gradient_features(pushed, tx);
  for (std::size_t j = 0; j < fa.values.size(); ++j)
    EXPECT_NEAR(fb.values[j], fa.values[j], 1e-9 * std::max(1.0, fa.values[j]));
}
