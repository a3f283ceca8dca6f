#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>

#include "fimscore/errors.hpp"
#include "fimscore/models/checkpoint.hpp"
#include "fimscore/models/coupling_flow.hpp"
#include "fimscore/models/diag_gaussian.hpp"
#include "fimscore/numcore/finite_diff.hpp"
#include "fimscore/numcore/special.hpp"

using namespace fimscore;

namespace {

CouplingFlowHyper small_flow(std::size_t dim = 2) {
  CouplingFlowHyper h;
  h.dim = dim;
  h.blocks = 4;
  h.hidden = 8;
  return h;
}

std::vector<double> normal_vector(Rng& rng, std::size_t n, double scale = 1.0) {
  std::vector<double> v(n);
  for (auto& x : v) x = scale * rng.normal();
  return v;
}

// Max relative error between the analytic score and central differences of
// log p(x) as a function of the flattened parameters.
double gradient_oracle_error(const Model& model, std::span<const double> x) {
  auto probe = model.clone();
  const auto theta = model.params().flatten();
  const ScalarFunction f = [&](std::span<const double> t) {
    probe->mutable_params().assign_flat(t);
    return probe->log_likelihood(x);
  };
  const auto numeric = finite_diff_grad(f, theta, 1e-5);
  const auto analytic = model.score(x).flatten();
  return relative_error(analytic, numeric);
}

}  // namespace

TEST(LayeredParams, Validation) {
  EXPECT_NO_THROW(LayeredParams({{"a", {2}, {1, 2}}, {"b", {1, 2}, {3, 4}}}));
  EXPECT_THROW(LayeredParams({{"a", {2}, {1, 2}}, {"a", {1}, {3}}}), DomainError);
  EXPECT_THROW(LayeredParams({{"a", {3}, {1, 2}}}), DimensionMismatch);
  EXPECT_THROW(LayeredParams({{"a", {1}, {NAN}}}), NonFiniteError);
  EXPECT_THROW(LayeredParams(std::vector<Layer>{}), DomainError);
}

TEST(LayeredParams, FlattenRoundTrip) {
  LayeredParams p({{"a", {2}, {1, 2}}, {"b", {2, 2}, {3, 4, 5, 6}}});
  EXPECT_EQ(p.total_size(), 6u);
  const std::vector<double> flat{9, 8, 7, 6, 5, 4};
  p.assign_flat(flat);
  EXPECT_EQ(p.flatten(), flat);
  EXPECT_EQ(p.find("b"), 1u);
  EXPECT_FALSE(p.find("c").has_value());
  const std::vector<double> short_flat{1.0};
  EXPECT_THROW(p.assign_flat(short_flat), DimensionMismatch);
}

TEST(DiagGaussian, StandardNormalAtMode) {
  const auto m = DiagGaussianModel::standard(1);
  const std::vector<double> x{0.0};
  EXPECT_NEAR(m.log_likelihood(x), -0.5 * std::log(2 * M_PI), 1e-15);
}

TEST(DiagGaussian, ClosedFormLikelihoodAndScore) {
  const DiagGaussianModel m({1.0, -2.0}, {0.5, -0.3});
  const std::vector<double> x{0.2, -1.1};
  double ll = 0.0;
  std::vector<double> g_mu(2), g_ls(2);
  for (int i = 0; i < 2; ++i) {
    const double s = std::exp(m.log_sigma()[i]);
    const double r = (x[i] - m.mu()[i]) / s;
    ll += -0.5 * std::log(2 * M_PI) - std::log(s) - 0.5 * r * r;
    g_mu[i] = (x[i] - m.mu()[i]) / (s * s);
    g_ls[i] = r * r - 1.0;
  }
  EXPECT_NEAR(m.log_likelihood(x), ll, 1e-14);
  const auto g = m.score(x);
  for (int i = 0; i < 2; ++i) {
    EXPECT_NEAR(g.layer(0)[i], g_mu[i], 1e-14);
    EXPECT_NEAR(g.layer(1)[i], g_ls[i], 1e-14);
  }
}

TEST(DiagGaussian, ScoreAtMean) {
  const DiagGaussianModel m({0.3, 0.7, -1.0}, {0.1, 0.2, 0.3});
  const auto g = m.score(m.mu());
  for (double v : g.layer(0)) EXPECT_EQ(v, 0.0);
  for (double v : g.layer(1)) EXPECT_EQ(v, -1.0);
}

TEST(DiagGaussian, DimensionMismatch) {
  const auto m = DiagGaussianModel::standard(2);
  const std::vector<double> x{1.0, 2.0, 3.0};
  EXPECT_THROW(m.log_likelihood(x), DimensionMismatch);
}

TEST(DiagGaussian, SampleMoments) {
  const auto m = DiagGaussianModel::standard(1);
  Rng rng(11);
  const auto s = m.sample(rng, 100000);
  double mean = 0.0, sq = 0.0;
  for (double v : s.data()) {
    mean += v;
    sq += v * v;
  }
  mean /= 1e5;
  EXPECT_NEAR(mean, 0.0, 0.02);
  EXPECT_NEAR(sq / 1e5 - mean * mean, 1.0, 0.05);
}

TEST(GradientOracle, DiagGaussianTwentyPairs) {
  Rng rng(21);
  for (int rep = 0; rep < 20; ++rep) {
    const std::size_t d = 1 + rep % 4;
    const DiagGaussianModel m(normal_vector(rng, d), normal_vector(rng, d, 0.5));
    const auto x = normal_vector(rng, d, 2.0);
    EXPECT_LE(gradient_oracle_error(m, x), 1e-5) << rep;
  }
}

TEST(GradientOracle, CouplingFlowTwentyPairs) {
  Rng rng(22);
  for (int rep = 0; rep < 20; ++rep) {
    const auto m = CouplingFlowModel::random(small_flow(rep % 2 ? 4 : 2), rng, 0.5);
    const auto x = normal_vector(rng, m.dim(), 1.5);
    EXPECT_LE(gradient_oracle_error(m, x), 1e-5) << rep;
  }
}

TEST(GradientOracle, SaturatedClampStillMatches) {
  Rng rng(23);
  CouplingFlowHyper h = small_flow();
  h.clamp = 0.5;
  const auto m = CouplingFlowModel::random(h, rng, 2.0);
  for (int rep = 0; rep < 5; ++rep) {
    const auto x = normal_vector(rng, 2, 2.0);
    EXPECT_LE(gradient_oracle_error(m, x), 1e-5);
  }
}

TEST(CouplingFlow, LayerLayout) {
  const CouplingFlowModel m(CouplingFlowHyper{});
  EXPECT_EQ(m.params().layer_count(), 24u);
  EXPECT_EQ(m.params().layer(0).name, "block0.w_in");
  EXPECT_EQ(m.params().layer(0).shape, (std::vector<std::size_t>{32, 1}));
  EXPECT_EQ(m.params().layer(2).shape, (std::vector<std::size_t>{2, 32}));
  EXPECT_EQ(m.params().layer(23).name, "block5.b_out");
  EXPECT_THROW(CouplingFlowModel(CouplingFlowHyper{3, 2, 4, 5.0}), DomainError);
}

TEST(CouplingFlow, ZeroParametersIsStandardNormal) {
  const CouplingFlowModel m(CouplingFlowHyper{});
  Rng rng(31);
  for (int rep = 0; rep < 10; ++rep) {
    const auto x = normal_vector(rng, 2, 3.0);
    const double expected = std_normal_log_pdf(x[0]) + std_normal_log_pdf(x[1]);
    EXPECT_NEAR(m.log_likelihood(x), expected, 1e-14);
  }
}

TEST(CouplingFlow, ZeroParameterSamplesPassKs) {
  const CouplingFlowModel m(CouplingFlowHyper{});
  Rng rng(32);
  const auto s = m.sample(rng, 10000);
  for (std::size_t c = 0; c < 2; ++c) {
    auto col = s.column(c);
    std::sort(col.begin(), col.end());
    double ks = 0.0;
    for (std::size_t i = 0; i < col.size(); ++i) {
      const double f = std_normal_cdf(col[i]);
      ks = std::max({ks, std::abs(f - static_cast<double>(i) / 1e4), std::abs(f - static_cast<double>(i + 1) / 1e4)});
    }
    EXPECT_LT(ks, 0.02);
  }
}

TEST(CouplingFlow, Invertibility) {
  Rng rng(33);
  const auto m = CouplingFlowModel::random(CouplingFlowHyper{}, rng, 0.5);
  for (int rep = 0; rep < 100; ++rep) {
    const auto x = normal_vector(rng, 2, 2.0);
    const auto back = m.inverse(m.forward(x).z);
    ASSERT_LE(max_abs_diff(back, x), 1e-9);
    const auto z = normal_vector(rng, 2);
    ASSERT_LE(max_abs_diff(m.forward(m.inverse(z)).z, z), 1e-10);
  }
}

TEST(CouplingFlow, LogDetMatchesBlockScales) {
  Rng rng(34);
  const auto m = CouplingFlowModel::random(CouplingFlowHyper{}, rng, 0.5);
  for (int rep = 0; rep < 20; ++rep) {
    const auto x = normal_vector(rng, 2);
    const auto fwd = m.forward(x);
    double log_det = 0.0;
    for (const auto& block : m.block_log_scales(x))
      for (double s : block) log_det += s;
    double base = 0.0;
    for (double z : fwd.z) base += std_normal_log_pdf(z);
    EXPECT_NEAR(m.log_likelihood(x), base + log_det, 1e-10);
    EXPECT_NEAR(fwd.log_det, log_det, 1e-12);
  }
}

TEST(CouplingFlow, LogDetMatchesNumericJacobian) {
  Rng rng(35);
  const auto m = CouplingFlowModel::random(small_flow(4), rng, 0.5);
  const auto x = normal_vector(rng, 4);
  DenseMatrix jac(4, 4);
  const double h = 1e-6;
  for (std::size_t j = 0; j < 4; ++j) {
    auto xp = x;
    auto xm = x;
    xp[j] += h;
    xm[j] -= h;
    const auto zp = m.forward(xp).z;
    const auto zm = m.forward(xm).z;
    for (std::size_t i = 0; i < 4; ++i) jac(i, j) = (zp[i] - zm[i]) / (2 * h);
  }
  EXPECT_NEAR(log_abs_det(jac), m.forward(x).log_det, 1e-7);
}

TEST(CouplingFlow, DensityIntegratesToOne) {
  Rng rng(36);
  const auto m = CouplingFlowModel::random(small_flow(), rng, 0.3);
  const double lo = -9.0, hi = 9.0, step = 0.02;
  const auto n = static_cast<std::size_t>((hi - lo) / step);
  double mass = 0.0;
  std::vector<double> x(2);
  for (std::size_t i = 0; i < n; ++i) {
    x[0] = lo + (i + 0.5) * step;
    for (std::size_t j = 0; j < n; ++j) {
      x[1] = lo + (j + 0.5) * step;
      mass += std::exp(m.log_likelihood(x));
    }
  }
  EXPECT_NEAR(mass * step * step, 1.0, 0.01);
}

TEST(ExpectedScore, DiagGaussianIsZero) {
  const DiagGaussianModel m({0.5, -1.0}, {0.2, -0.4});
  Rng rng(41);
  const std::size_t n = 100000;
  const auto g = expected_score_mc(m, rng, n);
  for (double v : g.flatten()) EXPECT_LE(std::abs(v), 4.0 / std::sqrt(static_cast<double>(n)));
}

TEST(ExpectedScore, SingleSampleEqualsScore) {
  Rng rng(42);
  const auto m = CouplingFlowModel::random(small_flow(), rng, 0.3);
  Rng a(7);
  Rng b(7);
  const auto mean = expected_score_mc(m, a, 1);
  const auto draw = m.sample(b, 1);
  EXPECT_EQ(mean, m.score(draw.row(0)));
}

TEST(ExpectedScore, FlowIsZeroWithinStandardError) {
  Rng rng(43);
  const auto m = CouplingFlowModel::random(small_flow(), rng, 0.3);
  const std::size_t n = 10000;
  const auto draws = m.sample(rng, n);
  const std::size_t p = m.params().total_size();
  std::vector<double> sum(p, 0.0), sq(p, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const auto s = m.score(draws.row(i)).flatten();
    for (std::size_t k = 0; k < p; ++k) {
      sum[k] += s[k];
      sq[k] += s[k] * s[k];
    }
  }
  for (std::size_t k = 0; k < p; ++k) {
    const double mean = sum[k] / n;
    const double se = std::sqrt(std::max(sq[k] / n - mean * mean, 0.0) / n);
    EXPECT_LE(std::abs(mean), 10 * se + 1e-15) << k;
  }
}

TEST(Checkpoint, RoundTripIsBitExact) {
  Rng rng(51);
  const auto flow = CouplingFlowModel::random(CouplingFlowHyper{}, rng, 0.5);
  const DiagGaussianModel gauss(normal_vector(rng, 3), normal_vector(rng, 3));
  const auto dir = std::filesystem::temp_directory_path() / "fimscore_ckpt_test";
  std::filesystem::create_directories(dir);
  for (const Model* m : {static_cast<const Model*>(&flow), static_cast<const Model*>(&gauss)}) {
    const auto path = dir / (std::string(m->kind()) + ".json");
    save_checkpoint(*m, path);
    const auto loaded = load_checkpoint(path);
    EXPECT_EQ(loaded->kind(), m->kind());
    EXPECT_EQ(loaded->params(), m->params());
    EXPECT_EQ(loaded->checksum(), m->checksum());
    const auto x = normal_vector(rng, m->dim());
    EXPECT_EQ(loaded->log_likelihood(x), m->log_likelihood(x));
  }
  std::filesystem::remove_all(dir);
}

TEST(Checkpoint, RejectsMalformedDocuments) {
  EXPECT_THROW(checkpoint_from_json(nlohmann::json{{"type", "glow"}}), ParseError);
  auto doc = checkpoint_to_json(DiagGaussianModel::standard(2));
  doc["layers"][0]["values"] = {1.0};
  EXPECT_THROW(checkpoint_from_json(doc), Error);
  EXPECT_THROW(load_checkpoint("/nonexistent/model.json"), IoError);
}
