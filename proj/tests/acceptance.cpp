// Acceptance harness: one PASS/FAIL line per criterion. Tolerances and
// runtime limits are pinned below.

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <new>
#include <string>
#include <vector>

#include "fimscore/data/dataset.hpp"
#include "fimscore/detector/detector.hpp"
#include "fimscore/errors.hpp"
#include "fimscore/evaluation/auroc.hpp"
#include "fimscore/evaluation/pairings.hpp"
#include "fimscore/fim/fim.hpp"
#include "fimscore/gradfeatures/features.hpp"
#include "fimscore/models/coupling_flow.hpp"
#include "fimscore/models/diag_gaussian.hpp"
#include "fimscore/numcore/finite_diff.hpp"
#include "fimscore/representation/total_variation.hpp"
#include "fimscore/representation/transforms.hpp"
#include "fimscore/trainer/trainer.hpp"
#include "support/oracles.hpp"

using namespace fimscore;

namespace {

std::atomic<bool> g_track{false};
std::atomic<std::size_t> g_largest{0};

}  // namespace

void* operator new(std::size_t n) {
  if (g_track.load(std::memory_order_relaxed)) {
    std::size_t prev = g_largest.load(std::memory_order_relaxed);
    while (n > prev && !g_largest.compare_exchange_weak(prev, n)) {
    }
  }
  if (void* p = std::malloc(n == 0 ? 1 : n)) return p;
  throw std::bad_alloc();
}

void operator delete(void* p) noexcept { std::free(p); }
void operator delete(void* p, std::size_t) noexcept { std::free(p); }

namespace {

constexpr std::uint64_t kSeed = 20240601;

constexpr double kInvarianceGradTol = 1e-10;
constexpr double kInvarianceValueTol = 1e-9;
constexpr double kChi2MeanRel = 0.05;
constexpr double kChi2VarRel = 0.15;
constexpr double kShermanMorrisonRel = 1e-8;
constexpr double kFimRel = 0.05;
constexpr double kDominanceMin = 2.0;
constexpr double kDominancePaperReference = 5.0;
constexpr double kAurocMin = 0.95;
constexpr double kShiftTol = 1e-9;
constexpr double kTvLog10 = -116.76;
constexpr double kTvLog10Tol = 0.01;
constexpr double kMcStdErrors = 3.0;
constexpr double kHsvFdTol = 1e-4;
constexpr double kHsvFactorTol = 1e-10;
constexpr double kGradOracleRel = 1e-5;

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof(buf), f, args...);
  return buf;
}

std::vector<double> random_pixels(Rng& rng, std::size_t n_pixels) {
  std::vector<double> x;
  for (std::size_t i = 0; i < 3 * n_pixels; ++i) x.push_back(rng.uniform(0.05, 1.0));
  return x;
}

DenseMatrix random_rows(Rng& rng, std::size_t n, std::size_t d) {
  DenseMatrix x(n, d);
  for (auto& v : x.data()) v = rng.normal();
  return x;
}

// Shared by criteria 5, 6, 7 and 11.
struct TrainedFlow {
  std::unique_ptr<Model> model;
  DenseMatrix fit_split;
  DenseMatrix eval_split;
  double train_seconds = 0.0;
};

const TrainedFlow& trained_flow() {
  static const TrainedFlow flow = [] {
    const auto t0 = std::chrono::steady_clock::now();
    const auto moons = generate(TwoMoons{}, 20000, kSeed, "two_moons");
    Rng init(kSeed + 1);
    const auto start = CouplingFlowModel::random(CouplingFlowHyper{}, init);
    TrainConfig cfg;
    cfg.seed = kSeed + 2;
    auto res = train(start, moons.points, cfg);
    TrainedFlow out;
    out.model = std::move(res.model);
    out.fit_split = std::move(res.fit_split);
    out.eval_split = generate(TwoMoons{}, 2000, kSeed + 3).points;
    out.train_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return out;
  }();
  return flow;
}

std::vector<DistributionEntry> benchmark_entries() {
  const auto& flow = trained_flow();
  std::shared_ptr<const Model> model(flow.model->clone());
  std::vector<DistributionEntry> d;
  d.push_back({"two_moons", model, flow.fit_split, flow.eval_split});
  std::uint64_t s = kSeed + 10;
  for (const char* name : {"uniform_square", "rings", "gauss_grid"}) {
    DistributionEntry e;
    e.id = name;
    e.eval_split = generate(default_distribution(name), 2000, s++).points;
    e.test_only = true;
    d.push_back(std::move(e));
  }
  return d;
}

Outcome gradient_invariance() {
  Rng rng(kSeed);
  std::vector<std::unique_ptr<Model>> models;
  models.push_back(std::make_unique<CouplingFlowModel>(CouplingFlowModel::random(CouplingFlowHyper{6, 4, 8, 5.0}, rng, 0.3)));
  models.push_back(std::make_unique<CouplingFlowModel>(CouplingFlowModel::random(CouplingFlowHyper{6, 2, 16, 5.0}, rng, 0.3)));
  std::vector<double> mu(6), ls(6);
  for (auto& v : mu) v = rng.uniform(0.2, 0.8);
  for (auto& v : ls) v = rng.uniform(-1.5, -0.5);
  models.push_back(std::make_unique<DiagGaussianModel>(mu, ls));

  DenseMatrix a(6, 6);
  for (std::size_t i = 0; i < 6; ++i)
    for (std::size_t j = 0; j < 6; ++j) a(i, j) = (i == j ? 1.0 : 0.0) + 0.3 * rng.normal();
  std::vector<double> b(6);
  for (auto& v : b) v = rng.normal();
  const std::vector<InvertibleTransform> transforms{
      InvertibleTransform::affine(a, b), InvertibleTransform::elementwise(MonotoneFn::kSinh),
      InvertibleTransform::elementwise(MonotoneFn::kAsinh), InvertibleTransform::elementwise(MonotoneFn::kExp),
      InvertibleTransform::rgb_to_hsv()};

  double worst_grad = 0.0, worst_gap = 0.0;
  for (const auto& m : models)
    for (const auto& t : transforms)
      for (int p = 0; p < 20; ++p) {
        const auto x = random_pixels(rng, 2);
        const auto chk = check_gradient_invariance(*m, t, x);
        worst_grad = std::max(worst_grad, chk.max_grad_discrepancy);
        worst_gap = std::max(worst_gap, chk.value_gap_error);
      }
  return {worst_grad <= kInvarianceGradTol && worst_gap <= kInvarianceValueTol,
          fmt("3 models x 5 transforms x 20 points: max grad discrepancy %.3g (tol %g), max |dll - logdet| %.3g (tol %g)",
              worst_grad, kInvarianceGradTol, worst_gap, kInvarianceValueTol)};
}

Outcome chi2_calibration() {
  const std::size_t d = 3;
  const DiagGaussianModel truth({0.5, -1.0, 2.0}, {0.0, 0.3, -0.4});
  Rng rng(kSeed);
  const auto x = truth.sample(rng, 10000);
  const auto mle = analytic_mle_gaussian(x);
  double s = 0.0, sq = 0.0;
  for (std::size_t i = 0; i < x.rows(); ++i) {
    const double t = exact_score_test_gaussian(mle, x.row(i)).statistic;
    s += t;
    sq += t * t;
  }
  const double dof = 2.0 * d;
  const double mean = s / x.rows();
  const double var = sq / x.rows() - mean * mean;
  const bool ok = std::abs(mean - dof) <= kChi2MeanRel * dof && std::abs(var - 2 * dof) <= kChi2VarRel * 2 * dof;
  return {ok, fmt("dof %g: mean %.4f (target %g +- %g%%), variance %.3f (target %g +- %g%%; the statistic's exact "
                  "variance is 24 per dimension = %g)",
                  dof, mean, dof, 100 * kChi2MeanRel, var, 2 * dof, 100 * kChi2VarRel, 24.0 * d)};
}

Outcome sherman_morrison_equivalence() {
  Rng rng(kSeed);
  double worst = 0.0;
  for (int rep = 0; rep < 50; ++rep) {
    const std::size_t p = 2 + rng.bounded(63);
    const std::size_t n = rng.bounded(51);
    std::vector<double> a0(p);
    for (auto& v : a0) v = 0.5 + rng.uniform();
    const auto s = random_rows(rng, n, p);
    std::vector<double> sx(p);
    for (auto& v : sx) v = rng.normal();
    const double want = oracle::cholesky_quadratic_form(a0, s, sx);
    worst = std::max(worst, std::abs(sherman_morrison_score(a0, s, sx) - want) / std::abs(want));
  }
  const std::size_t p = 512, n = 50;
  const auto s = random_rows(rng, n, p);
  std::vector<double> a0(p, 1.0), sx(p);
  for (auto& v : sx) v = rng.normal();
  g_largest = 0;
  g_track = true;
  const double q = sherman_morrison_score(a0, s, sx);
  g_track = false;
  const std::size_t pp = p * p * sizeof(double);
  const bool mem_ok = std::isfinite(q) && g_largest.load() < pp / 4;
  return {worst <= kShermanMorrisonRel && mem_ok,
          fmt("50 instances: max rel error %.3g (tol %g); P=%zu N=%zu largest allocation %zu bytes vs P*P %zu bytes",
              worst, kShermanMorrisonRel, p, n, g_largest.load(), pp)};
}

Outcome mc_fim() {
  const DiagGaussianModel m({0.3, -0.7}, {std::log(0.5), std::log(2.0)});
  Rng rng(kSeed);
  const std::vector<WeightIndex> subset{{0, 0}, {0, 1}, {1, 0}, {1, 1}};
  const auto slice = mc_fim_slice(m, rng, subset, 100000);
  const std::vector<double> analytic{1 / 0.25, 1 / 4.0, 2.0, 2.0};
  double worst = 0.0;
  for (std::size_t i = 0; i < 4; ++i) worst = std::max(worst, std::abs(slice.matrix()(i, i) / analytic[i] - 1.0));
  // Off-diagonals are zero analytically; compare against the diagonal scale.
  double worst_off = 0.0;
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t j = 0; j < 4; ++j)
      if (i != j)
        worst_off =
            std::max(worst_off, std::abs(slice.matrix()(i, j)) / std::sqrt(analytic[i] * analytic[j]));
  bool psd = true;
  try {
    check_symmetric_psd(slice.matrix());
    Rng r2(kSeed + 1);
    const auto flow = CouplingFlowModel::random(CouplingFlowHyper{2, 4, 16, 5.0}, r2, 0.3);
    const std::vector<std::size_t> layers{0, 1};
    const auto sub = select_weight_subset(flow.params(), layers, r2);
    check_symmetric_psd(mc_fim_slice(flow, r2, sub, 256).matrix());
  } catch (const Error&) {
    psd = false;
  }
  return {worst <= kFimRel && worst_off <= kFimRel && psd,
          fmt("N=1e5: max diagonal rel error %.4f, max off-diagonal %.4f (tol %g); symmetry/PSD %s", worst, worst_off,
              kFimRel, psd ? "ok" : "violated")};
}

Outcome diagonal_dominance() {
  const auto& flow = trained_flow();
  Rng rng(kSeed);
  const std::vector<std::size_t> layers{0, 1};
  const auto subset = select_weight_subset(flow.model->params(), layers, rng);
  const auto slice = mc_fim_slice(*flow.model, rng, subset, 1024);
  const auto dom = diag_dominance(slice.matrix());
  return {dom.ratio() > kDominanceMin,
          fmt("trained flow, %zu weights, N=1024: off-diagonal mean |C| %.4f, ratio %.2f (need > %g; reference "
              "figure ~%g)",
              subset.size(), dom.offdiag_mean, dom.ratio(), kDominanceMin, kDominancePaperReference)};
}

Outcome detection_benchmark() {
  const auto t0 = std::chrono::steady_clock::now();
  const auto& flow = trained_flow();
  PairingConfig cfg;
  cfg.seed = kSeed;
  const auto report = run_pairings(benchmark_entries(), cfg);
  bool ok = true;
  int beats_typicality = 0;
  std::string detail;
  for (const char* ood : {"uniform_square", "rings", "gauss_grid"}) {
    const double b5 = *report.find("two_moons", ood, Method::kOurs, 5)->auroc;
    const double b1 = *report.find("two_moons", ood, Method::kOurs, 1)->auroc;
    const double typ = *report.find("two_moons", ood, Method::kTypicality, 5)->auroc;
    ok = ok && b5 >= kAurocMin && b5 >= b1;
    if (b5 >= typ) ++beats_typicality;
    detail += fmt("%s ours B5 %.5f B1 %.5f typicality B5 %.5f; ", ood, b5, b1, typ);
  }
  ok = ok && beats_typicality >= 2;
  const double secs = flow.train_seconds + std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  ok = ok && secs < 600.0;
  return {ok, detail + fmt("ours >= typicality on %d/3 (need >= 2); AUROC floor %g; %.1f s incl. training",
                           beats_typicality, kAurocMin, secs)};
}

Outcome layer_shift_invariance() {
  const auto& flow = trained_flow();
  const auto fit = log_feature_matrix(batch_feature_matrix(*flow.model, flow.fit_split, 5));
  const auto in = log_feature_matrix(batch_feature_matrix(*flow.model, flow.eval_split, 5));
  const auto out = log_feature_matrix(
      batch_feature_matrix(*flow.model, generate(default_distribution("rings"), 2000, kSeed).points, 5));
  const auto det = fit_detector(fit);
  const auto s_in = ood_scores(det, in);
  const auto s_out = ood_scores(det, out);

  Rng rng(kSeed);
  std::vector<double> shift(fit.cols());
  for (auto& c : shift) c = 50.0 * rng.normal();
  auto shifted = [&](DenseMatrix m) {
    for (std::size_t i = 0; i < m.rows(); ++i)
      for (std::size_t j = 0; j < m.cols(); ++j) m(i, j) += shift[j];
    return m;
  };
  const auto det2 = fit_detector(shifted(fit));
  const auto t_in = ood_scores(det2, shifted(in));
  const auto t_out = ood_scores(det2, shifted(out));
  double worst = 0.0;
  for (std::size_t i = 0; i < s_in.size(); ++i) worst = std::max(worst, std::abs(t_in[i] - s_in[i]));
  for (std::size_t i = 0; i < s_out.size(); ++i) worst = std::max(worst, std::abs(t_out[i] - s_out[i]));
  const double a = auroc(s_in, s_out);
  const double b = auroc(t_in, t_out);
  return {worst <= kShiftTol && a == b,
          fmt("max score change %.3g (tol %g); AUROC %.17g vs %.17g", worst, kShiftTol, a, b)};
}

Outcome auroc_oracle() {
  Rng rng(kSeed);
  int mismatches = 0;
  for (int rep = 0; rep < 100; ++rep) {
    const std::size_t n = 1 + rng.bounded(500);
    const std::size_t m = 1 + rng.bounded(500);
    const double shift = rng.uniform(-1.0, 2.0);
    std::vector<double> in(n), out(m);
    // Rounding to a coarse grid forces ties on every other instance.
    const double grid = rep % 2 == 0 ? 4.0 : 1e6;
    for (auto& v : in) v = std::round(rng.normal() * grid) / grid;
    for (auto& v : out) v = std::round((rng.normal() + shift) * grid) / grid;
    if (auroc(in, out) != oracle::pairwise_auroc(in, out)) ++mismatches;
  }
  return {mismatches == 0, fmt("100 instances (n <= 500, ties on half): %d exact mismatches", mismatches)};
}

Outcome tv_volume() {
  const double l10 = tv_log10_volume(102.9, 784);
  Rng rng(kSeed);
  double worst_z = 0.0;
  for (std::size_t d = 1; d <= 3; ++d) {
    const auto est = tv_volume_mc(1.0, d, 1000000, rng);
    const double exact = std::exp(tv_log_volume(1.0, d));
    const double err = std::abs(est.volume - exact);
    const double z = est.std_error > 0 ? err / est.std_error : (err < 1e-12 ? 0.0 : INFINITY);
    worst_z = std::max(worst_z, z);
  }
  return {std::abs(l10 - kTvLog10) <= kTvLog10Tol && worst_z <= kMcStdErrors,
          fmt("log10 volume(102.9, 784) = %.4f (target %g +- %g); MC d <= 3 worst |z| %.2f (<= %g)", l10, kTvLog10,
              kTvLog10Tol, worst_z, kMcStdErrors)};
}

Outcome rgb_hsv_jacobian_check() {
  Rng rng(kSeed);
  double worst = 0.0;
  std::vector<double> image;
  double summed = 0.0;
  for (int i = 0; i < 10000; ++i) {
    std::vector<double> px(3);
    for (auto& v : px) v = static_cast<double>(rng.bounded(256)) / 255.0;
    px = dequantize(px, rng);
    const double mx = std::max({px[0], px[1], px[2]});
    const double mn = std::min({px[0], px[1], px[2]});
    if (mx - mn < 1e-9 || mx <= 0.0) {
      --i;
      continue;
    }
    const double fd = std::log(std::abs(oracle::det3(oracle::numeric_hsv_jacobian(px))));
    worst = std::max(worst, std::abs(rgb_hsv_log_det(px) - fd));
    if (i < 1024) {
      image.insert(image.end(), px.begin(), px.end());
      summed += rgb_hsv_log_det(px);
    }
  }
  const double factor_err = std::abs(InvertibleTransform::rgb_to_hsv().log_abs_det(image) - summed);
  return {worst <= kHsvFdTol && factor_err <= kHsvFactorTol,
          fmt("1e4 dequantized pixels: max |analytic - FD| log-det %.3g (tol %g); 1024-pixel image factorization "
              "error %.3g (tol %g)",
              worst, kHsvFdTol, factor_err, kHsvFactorTol)};
}

Outcome fisher_grids() {
  PairingConfig cfg;
  cfg.seed = kSeed;
  cfg.methods = {Method::kOurs, Method::kFisher};
  const auto entries = benchmark_entries();
  const auto r1 = run_pairings(entries, cfg);
  const auto r2 = run_pairings(entries, cfg);
  bool complete = true;
  std::string detail;
  for (const auto& c : r1.cells) complete = complete && c.auroc.has_value();
  for (const char* ood : {"uniform_square", "rings", "gauss_grid"}) {
    detail += fmt("%s ours %.4f fisher %.4f; ", ood, *r1.find("two_moons", ood, Method::kOurs, 5)->auroc,
                  *r1.find("two_moons", ood, Method::kFisher, 5)->auroc);
  }
  const std::string grid = render_text_grid(r1);
  const bool both = grid.find("ours (B = 5)") != std::string::npos && grid.find("fisher (B = 5)") != std::string::npos;
  const bool same = report_to_json(r1).dump() == report_to_json(r2).dump() && grid == render_text_grid(r2);
  return {complete && both && same, detail + fmt("B=5; both grids %s, rerun %s", both && complete ? "present" : "missing",
                                                 same ? "identical" : "differs")};
}

double gradient_oracle_error(const Model& model, std::span<const double> x) {
  auto probe = model.clone();
  const auto theta = model.params().flatten();
  const ScalarFunction f = [&](std::span<const double> t) {
    probe->mutable_params().assign_flat(t);
    return probe->log_likelihood(x);
  };
  return relative_error(model.score(x).flatten(), finite_diff_grad(f, theta, 1e-5));
}

Outcome gradient_oracle() {
  Rng rng(kSeed);
  double worst_g = 0.0, worst_f = 0.0, worst_p = 0.0;
  for (int rep = 0; rep < 20; ++rep) {
    std::vector<double> mu(3), ls(3);
    for (auto& v : mu) v = rng.normal();
    for (auto& v : ls) v = 0.5 * rng.normal();
    const DiagGaussianModel g(mu, ls);
    const auto x = g.sample(rng, 1);
    worst_g = std::max(worst_g, gradient_oracle_error(g, x.row(0)));

    const auto flow = CouplingFlowModel::random(CouplingFlowHyper{2, 4, 8, 5.0}, rng, 0.5);
    std::vector<double> xf{1.5 * rng.normal(), 1.5 * rng.normal()};
    worst_f = std::max(worst_f, gradient_oracle_error(flow, xf));

    const PushforwardModel pushed(g, InvertibleTransform::elementwise(MonotoneFn::kSinh));
    const auto tx = InvertibleTransform::elementwise(MonotoneFn::kSinh).forward(x.row(0));
    worst_p = std::max(worst_p, gradient_oracle_error(pushed, tx));
  }
  const double worst = std::max({worst_g, worst_f, worst_p});
  return {worst <= kGradOracleRel,
          fmt("20 (theta, x) pairs each: diag_gaussian %.3g, coupling_flow %.3g, pushforward %.3g (tol %g)", worst_g,
              worst_f, worst_p, kGradOracleRel)};
}

struct Criterion {
  int id;
  const char* name;
  double limit_seconds;  // 0: no runtime limit
  std::function<Outcome()> run;
};

}  // namespace

int main() {
  const std::vector<Criterion> criteria{
      {1, "gradient invariance", 10.0, gradient_invariance},
      {2, "chi-square calibration", 5.0, chi2_calibration},
      {3, "sherman-morrison equivalence", 5.0, sherman_morrison_equivalence},
      {4, "monte-carlo fisher information", 30.0, mc_fim},
      {5, "diagonal dominance", 120.0, diagonal_dominance},
      {6, "detection benchmark", 0.0, detection_benchmark},
      {7, "layer-shift invariance", 0.0, layer_shift_invariance},
      {8, "auroc oracle", 0.0, auroc_oracle},
      {9, "total-variation volume", 0.0, tv_volume},
      {10, "rgb-hsv jacobian", 0.0, rgb_hsv_jacobian_check},
      {11, "fisher's method grids", 0.0, fisher_grids},
      {12, "gradient oracle", 0.0, gradient_oracle},
  };
  // Train once up front so its cost lands in criterion 6 only.
  trained_flow();
  int failed = 0;
  for (const auto& c : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (c.limit_seconds > 0 && secs >= c.limit_seconds) {
      o.pass = false;
      o.detail += fmt("; exceeded %g s", c.limit_seconds);
    }
    if (!o.pass) ++failed;
    std::printf("%s %2d %s: %s (%.2f s)\n", o.pass ? "PASS" : "FAIL", c.id, c.name, o.detail.c_str(), secs);
    std::fflush(stdout);
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
