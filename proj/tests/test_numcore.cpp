#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <set>

#include "fimscore/errors.hpp"
#include "fimscore/numcore/checksum.hpp"
#include "fimscore/numcore/dense_matrix.hpp"
#include "fimscore/numcore/finite_diff.hpp"
#include "fimscore/numcore/rng.hpp"
#include "fimscore/numcore/special.hpp"

using namespace fimscore;

TEST(Rng, MatchesPcg32ReferenceOutput) {
  // pcg32-demo with initstate 42, initseq 54.
  Rng rng(42, 54);
  const std::uint32_t expected[] = {0xa15c02b7, 0x7b47f409, 0xba1d3330, 0x83d2f293, 0xbfa4784b, 0xcbed606e};
  for (std::uint32_t e : expected) EXPECT_EQ(rng.next_u32(), e);
}

TEST(Rng, SameSeedSameSequence) {
  Rng a(123, 7);
  Rng b(123, 7);
  for (int i = 0; i < 1000000; ++i) ASSERT_EQ(a.next_u32(), b.next_u32());
}

TEST(Rng, DistinctStreamsDiffer) {
  Rng a(5, 1);
  Rng b(5, 2);
  int same = 0;
  for (int i = 0; i < 1000; ++i) same += a.next_u32() == b.next_u32();
  EXPECT_LT(same, 5);
  Rng parent(9);
  Rng c1 = parent.split();
  Rng c2 = parent.split();
  EXPECT_NE(c1.increment(), c2.increment());
}

TEST(Rng, AdvanceEqualsStepping) {
  Rng a(77, 3);
  Rng b(77, 3);
  for (int i = 0; i < 1000; ++i) a.next_u32();
  b.advance(1000);
  EXPECT_EQ(a.state(), b.state());
  EXPECT_EQ(a.next_u32(), b.next_u32());
}

TEST(Rng, UniformAndNormalMoments) {
  Rng rng(1);
  const int n = 200000;
  double su = 0, su2 = 0, sn = 0, sn2 = 0;
  for (int i = 0; i < n; ++i) {
    const double u = rng.uniform();
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
    su += u;
    su2 += u * u;
    const double z = rng.normal();
    sn += z;
    sn2 += z * z;
  }
  EXPECT_NEAR(su / n, 0.5, 0.005);
  EXPECT_NEAR(su2 / n - (su / n) * (su / n), 1.0 / 12.0, 0.002);
  EXPECT_NEAR(sn / n, 0.0, 0.01);
  EXPECT_NEAR(sn2 / n, 1.0, 0.01);
}

TEST(Rng, BoundedStaysInRangeAndCoversIt) {
  Rng rng(2);
  std::vector<int> hits(7, 0);
  for (int i = 0; i < 7000; ++i) {
    const auto v = rng.bounded(7);
    ASSERT_LT(v, 7u);
    ++hits[v];
  }
  for (int h : hits) EXPECT_GT(h, 800);
  EXPECT_THROW(rng.bounded(0), std::invalid_argument);
}

TEST(Rng, PermutationIsBijection) {
  Rng rng(3);
  for (std::size_t n : {0u, 1u, 2u, 17u, 500u}) {
    auto p = rng.permutation(n);
    std::sort(p.begin(), p.end());
    std::vector<std::size_t> iota(n);
    std::iota(iota.begin(), iota.end(), 0);
    EXPECT_EQ(p, iota);
  }
}

TEST(Rng, SampleWithoutReplacementIsSortedAndDistinct) {
  Rng rng(4);
  const auto s = rng.sample_without_replacement(100, 30);
  ASSERT_EQ(s.size(), 30u);
  EXPECT_TRUE(std::is_sorted(s.begin(), s.end()));
  EXPECT_EQ(std::set<std::size_t>(s.begin(), s.end()).size(), 30u);
  EXPECT_LT(s.back(), 100u);
  EXPECT_EQ(rng.sample_without_replacement(5, 5), (std::vector<std::size_t>{0, 1, 2, 3, 4}));
}

TEST(Special, LgammaExamples) {
  EXPECT_EQ(fimscore::lgamma(1.0), 0.0);
  EXPECT_EQ(fimscore::lgamma(2.0), 0.0);
  double fact = 1.0;
  for (int k = 2; k <= 10; ++k) fact *= k;
  EXPECT_NEAR(fimscore::lgamma(11.0), std::log(fact), 1e-12);
  EXPECT_NEAR(fimscore::lgamma(0.5), 0.5 * std::log(M_PI), 1e-12);
}

TEST(Special, LgammaRejectsNonPositive) {
  EXPECT_THROW(fimscore::lgamma(0.0), DomainError);
  EXPECT_THROW(fimscore::lgamma(-2.5), DomainError);
}

TEST(Special, LgammaRecurrence) {
  Rng rng(5);
  for (int i = 0; i < 2000; ++i) {
    const double x = 1.0 + rng.uniform() * 9999.0;
    ASSERT_NEAR(fimscore::lgamma(x + 1) - fimscore::lgamma(x), std::log(x), 1e-10) << x;
  }
}

TEST(Special, NormalCdfExamples) {
  EXPECT_EQ(std_normal_cdf(0.0), 0.5);
  EXPECT_NEAR(std_normal_cdf(40.0), 1.0, 1e-15);
  // 0.5 * (1 + erf(1/sqrt 2)) to 20 digits.
  EXPECT_NEAR(std_normal_cdf(1.0), 0.84134474606854293, 1e-12);
  EXPECT_NEAR(std_normal_cdf(-1.959963984540054), 0.025, 1e-12);
  // Deep tail stays accurate in relative terms.
  EXPECT_NEAR(std_normal_cdf(-10.0) / 7.6198530241605260e-24, 1.0, 1e-10);
}

TEST(Special, NormalCdfSymmetry) {
  for (double z = -10.0; z <= 10.0; z += 0.037) {
    ASSERT_LE(std::abs(std_normal_cdf(z) + std_normal_cdf(-z) - 1.0), 1e-14) << z;
  }
}

TEST(Special, NormalLogPdf) {
  EXPECT_NEAR(std_normal_log_pdf(0.0), -0.5 * std::log(2 * M_PI), 1e-15);
  EXPECT_NEAR(std_normal_log_pdf(2.0), -0.5 * std::log(2 * M_PI) - 2.0, 1e-15);
}

TEST(FiniteDiff, Examples) {
  const auto sq = [](std::span<const double> t) { return t[0] * t[0]; };
  const std::vector<double> at{3.0};
  EXPECT_NEAR(finite_diff_grad(sq, at, 1e-5)[0], 6.0, 1e-8);
  const auto prod = [](std::span<const double> t) { return t[0] * t[1]; };
  const std::vector<double> at2{2.0, 5.0};
  const auto g = finite_diff_grad(prod, at2, 1e-5);
  EXPECT_NEAR(g[0], 5.0, 1e-7);
  EXPECT_NEAR(g[1], 2.0, 1e-7);
}

TEST(FiniteDiff, NonFiniteEvaluationThrows) {
  const auto bad = [](std::span<const double> t) { return std::log(t[0]); };
  const std::vector<double> at{0.0};
  EXPECT_THROW(finite_diff_grad(bad, at, 1e-5), NonFiniteError);
}

TEST(FiniteDiff, RelativeErrorUsesUnitFloor) {
  const std::vector<double> a{1.5, 0.0};
  const std::vector<double> b{1.0, 0.0};
  EXPECT_DOUBLE_EQ(relative_error(a, b), 0.5);
  const std::vector<double> c{110.0};
  const std::vector<double> d{100.0};
  EXPECT_DOUBLE_EQ(relative_error(c, d), 0.1);
}

TEST(DenseMatrix, Basics) {
  DenseMatrix a{{1, 2, 3}, {4, 5, 6}};
  EXPECT_EQ(a.rows(), 2u);
  EXPECT_EQ(a.cols(), 3u);
  EXPECT_EQ(a(1, 2), 6.0);
  EXPECT_EQ(a.transpose()(2, 1), 6.0);
  EXPECT_EQ(a.column(1), (std::vector<double>{2, 5}));
  const DenseMatrix p = matmul(a, a.transpose());
  EXPECT_EQ(p, (DenseMatrix{{14, 32}, {32, 77}}));
  const std::vector<double> v{1, 1, 1};
  EXPECT_EQ(matvec(a, v), (std::vector<double>{6, 15}));
  EXPECT_EQ(DenseMatrix::identity(3).trace(), 3.0);
  std::vector<std::size_t> idx{1, 0};
  EXPECT_EQ(a.select_rows(idx)(0, 0), 4.0);
  EXPECT_EQ(a.slice_rows(1, 2).rows(), 1u);
  EXPECT_THROW(DenseMatrix(2, 2, std::vector<double>{1, 2, 3}), DimensionMismatch);
  EXPECT_THROW(matmul(a, a), DimensionMismatch);
}

TEST(SolveDense, Examples) {
  const std::vector<double> b{3, 4};
  EXPECT_EQ(solve_dense(DenseMatrix::identity(2), b), (std::vector<double>{3, 4}));
  const std::vector<double> b2{2, 4};
  const auto x = solve_dense(DenseMatrix{{2, 0}, {0, 4}}, b2);
  EXPECT_DOUBLE_EQ(x[0], 1.0);
  EXPECT_DOUBLE_EQ(x[1], 1.0);
}

TEST(SolveDense, SingularNamesPivot) {
  const DenseMatrix a{{1, 2}, {2, 4}};
  const std::vector<double> b{1, 1};
  try {
    solve_dense(a, b);
    FAIL() << "expected SingularMatrixError";
  } catch (const SingularMatrixError& e) {
    EXPECT_EQ(e.pivot(), 1u);
  }
}

TEST(SolveDense, RandomSpdResidual) {
  Rng rng(6);
  for (int rep = 0; rep < 50; ++rep) {
    const std::size_t n = 10;
    DenseMatrix g(n, n);
    for (auto& v : g.data()) v = rng.normal();
    DenseMatrix a = matmul(g, g.transpose());
    for (std::size_t i = 0; i < n; ++i) a(i, i) += 1.0;
    std::vector<double> b(n);
    for (auto& v : b) v = rng.normal();
    const auto x = solve_dense(a, b);
    const auto r = matvec(a, x);
    ASSERT_LE(max_abs_diff(r, b), 1e-8 * (1 + max_abs(b)));
  }
}

TEST(LogAbsDet, MatchesClosedForm) {
  const DenseMatrix a{{2, 1}, {-3, 4}};
  EXPECT_NEAR(log_abs_det(a), std::log(11.0), 1e-14);
  LuDecomposition lu(DenseMatrix{{0, 1}, {1, 0}});
  EXPECT_EQ(lu.det_sign(), -1);
  EXPECT_NEAR(lu.log_abs_det(), 0.0, 1e-15);
}

TEST(SymmetricEigen, KnownSpectrum) {
  const DenseMatrix a{{2, 1, 0}, {1, 2, 1}, {0, 1, 2}};
  const auto ev = symmetric_eigenvalues(a);
  ASSERT_EQ(ev.size(), 3u);
  EXPECT_NEAR(ev[0], 2 - std::sqrt(2.0), 1e-12);
  EXPECT_NEAR(ev[1], 2.0, 1e-12);
  EXPECT_NEAR(ev[2], 2 + std::sqrt(2.0), 1e-12);
}

TEST(Checksum, Fnv1aVectors) {
  Fnv1a empty;
  EXPECT_EQ(empty.hex(), "cbf29ce484222325");
  Fnv1a a;
  a.update(std::string_view("a"));
  EXPECT_EQ(a.hex(), "af63dc4c8601ec8c");
  Fnv1a foobar;
  foobar.update(std::string_view("foobar"));
  EXPECT_EQ(foobar.hex(), "85944171f73967e8");
}
