#include "commands.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>

#include "fimscore/baselines/baselines.hpp"
#include "fimscore/cli/cli.hpp"
#include "fimscore/data/dataset.hpp"
#include "fimscore/detector/detector.hpp"
#include "fimscore/errors.hpp"
#include "fimscore/evaluation/auroc.hpp"
#include "fimscore/evaluation/pairings.hpp"
#include "fimscore/fim/fim.hpp"
#include "fimscore/gradfeatures/features.hpp"
#include "fimscore/models/checkpoint.hpp"
#include "fimscore/models/coupling_flow.hpp"
#include "fimscore/models/diag_gaussian.hpp"
#include "fimscore/numcore/checksum.hpp"
#include "fimscore/representation/total_variation.hpp"
#include "fimscore/representation/transforms.hpp"
#include "fimscore/trainer/trainer.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace fimscore::cli {

namespace {

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open '" + path.string() + "' for writing");
  f << text;
  if (!f) throw IoError("write failed for '" + path.string() + "'");
}

void write_json(const fs::path& path, const json& doc) { write_text(path, doc.dump(2) + "\n"); }

fs::path prepare_out(const std::string& out) {
  if (out.empty()) throw DomainError("--out is required");
  fs::path dir(out);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create output directory '" + out + "': " + ec.message());
  return dir;
}

void require_file(const std::string& path, std::string_view flag) {
  if (path.empty()) throw DomainError(std::string(flag) + " is required");
  if (!fs::is_regular_file(path)) throw IoError("input file '" + path + "' does not exist");
}

std::string fmt_double(double v) {
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

void write_matrix_csv(const fs::path& path, const DenseMatrix& m) {
  std::ostringstream os;
  for (std::size_t i = 0; i < m.rows(); ++i) {
    for (std::size_t j = 0; j < m.cols(); ++j) os << (j ? "," : "") << fmt_double(m(i, j));
    os << '\n';
  }
  write_text(path, os.str());
}

DenseMatrix select_split(const Dataset& ds, const std::string& split) {
  if (split == "all") return ds.points;
  return ds.rows_with(parse_split(split));
}

std::pair<std::string, std::string> split_named(const std::string& spec, std::string_view flag) {
  const auto eq = spec.find('=');
  if (eq == std::string::npos || eq == 0 || eq + 1 == spec.size()) {
    throw DomainError(std::string(flag) + " expects NAME=PATH, got '" + spec + "'");
  }
  return {spec.substr(0, eq), spec.substr(eq + 1)};
}

Distribution build_distribution(const GenDataOptions& o) {
  Distribution dist = default_distribution(o.dist);
  std::vector<std::string> unused;
  auto apply = [&](bool given, bool applies, const char* flag, auto&& set) {
    if (!given) return;
    if (!applies) {
      unused.emplace_back(flag);
      return;
    }
    set();
  };
  auto* moons = std::get_if<TwoMoons>(&dist);
  auto* rings = std::get_if<Rings>(&dist);
  auto* grid = std::get_if<GaussGrid>(&dist);
  auto* board = std::get_if<Checkerboard>(&dist);
  auto* square = std::get_if<UniformSquare>(&dist);
  apply(o.noise.has_value(), moons || rings, "--noise", [&] {
    if (moons) moons->noise = *o.noise;
    if (rings) rings->noise = *o.noise;
  });
  apply(!o.radii.empty(), rings != nullptr, "--radii", [&] { rings->radii = o.radii; });
  apply(o.sigma.has_value(), grid != nullptr, "--sigma", [&] { grid->sigma = *o.sigma; });
  apply(o.spacing.has_value(), grid != nullptr, "--spacing", [&] { grid->spacing = *o.spacing; });
  apply(o.k.has_value(), grid != nullptr, "--k", [&] { grid->k = *o.k; });
  apply(o.cells.has_value(), board != nullptr, "--cells", [&] { board->cells = *o.cells; });
  apply(o.cell_size.has_value(), board != nullptr, "--cell-size", [&] { board->cell_size = *o.cell_size; });
  apply(o.side.has_value(), square != nullptr, "--side", [&] { square->side = *o.side; });
  if (!unused.empty()) {
    std::string list;
    for (const auto& u : unused) list += (list.empty() ? "" : ", ") + u;
    throw DomainError("parameters not used by " + o.dist + ": " + list);
  }
  return dist;
}

std::unique_ptr<Model> random_model(const std::string& kind, std::size_t dim, Rng& rng) {
  if (kind == "flow") {
    CouplingFlowHyper h;
    h.dim = dim;
    h.blocks = 4;
    h.hidden = 8;
    return std::make_unique<CouplingFlowModel>(CouplingFlowModel::random(h, rng, 0.3));
  }
  if (kind == "gaussian") {
    std::vector<double> mu(dim);
    std::vector<double> ls(dim);
    for (auto& v : mu) v = rng.normal();
    for (auto& v : ls) v = 0.3 * rng.normal();
    return std::make_unique<DiagGaussianModel>(std::move(mu), std::move(ls));
  }
  throw DomainError("unknown model kind '" + kind + "' (expected flow or gaussian)");
}

InvertibleTransform named_transform(const std::string& name, std::size_t dim, Rng& rng) {
  if (name == "identity") return InvertibleTransform::identity();
  if (name == "scale") return InvertibleTransform::scaling(dim, 2.0);
  if (name == "sinh") return InvertibleTransform::elementwise(MonotoneFn::kSinh);
  if (name == "asinh") return InvertibleTransform::elementwise(MonotoneFn::kAsinh);
  if (name == "exp") return InvertibleTransform::elementwise(MonotoneFn::kExp);
  if (name == "rgb_hsv") {
    if (dim % 3 != 0) throw DomainError("rgb_hsv needs a dimension divisible by 3");
    return InvertibleTransform::rgb_to_hsv();
  }
  if (name == "affine") {
    DenseMatrix a = DenseMatrix::identity(dim);
    std::vector<double> b(dim);
    for (std::size_t i = 0; i < dim; ++i) {
      for (std::size_t j = 0; j < dim; ++j) a(i, j) += 0.3 * rng.normal();
      b[i] = rng.normal();
    }
    return InvertibleTransform::affine(std::move(a), std::move(b));
  }
  throw DomainError("unknown transform '" + name + "'");
}

std::vector<double> sample_point(const std::string& transform, std::size_t dim, Rng& rng) {
  std::vector<double> x(dim);
  if (transform == "rgb_hsv") {
    // Dequantized pixels away from gray.
    for (auto& v : x) v = rng.uniform(0.05, 0.95);
    return x;
  }
  for (auto& v : x) v = rng.normal();
  return x;
}

}  // namespace

void RunContext::add_input(const fs::path& path) {
  inputs_.push_back({{"path", path.generic_string()}, {"checksum", file_checksum(path)}});
}

void RunContext::add_artifact(const fs::path& path) {
  artifacts_.push_back({{"path", path.generic_string()}, {"checksum", file_checksum(path)}});
}

void RunContext::describe_artifact(const fs::path& path, json extra) {
  fs::path side = path;
  side += ".json";
  json doc = json::object();
  if (fs::exists(side)) {
    std::ifstream in(side);
    doc = json::parse(in);
  }
  if (!doc.contains("producer")) doc["producer"] = subcommand_;
  if (!doc.contains("format_version")) doc["format_version"] = kFormatVersion;
  if (!doc.contains("config")) doc["config"] = config_;
  for (auto& [k, v] : extra.items()) doc[k] = v;
  write_json(side, doc);
  add_artifact(side);
}

void RunContext::write_manifest(const fs::path& out_dir) {
  json doc = {{"subcommand", subcommand_},
              {"format_version", kFormatVersion},
              {"config", config_},
              {"inputs", inputs_},
              {"artifacts", artifacts_}};
  write_json(out_dir / "manifest.json", doc);
}

int cmd_gen_data(const GenDataOptions& o, RunContext& ctx) {
  if (!(o.eval_fraction >= 0.0 && o.eval_fraction < 1.0)) throw DomainError("--eval-fraction must be in [0, 1)");
  const Distribution dist = build_distribution(o);
  const auto dir = prepare_out(o.out);
  Dataset ds = generate(dist, o.n, o.seed, o.name.empty() ? o.dist : o.name);
  const auto n_eval = static_cast<std::size_t>(std::llround(o.eval_fraction * static_cast<double>(o.n)));
  for (std::size_t r = o.n - n_eval; r < o.n; ++r) ds.splits[r] = Split::kEval;
  const auto path = dir / "data.dmat";
  save_dataset(ds, path);
  ctx.add_artifact(path);
  ctx.describe_artifact(path);
  ctx.write_manifest(dir);
  ctx.out() << "wrote " << ds.size() << " x " << ds.dim() << " " << ds.generator << " to " << path.generic_string()
            << "\n";
  return kExitOk;
}

int cmd_train(const TrainOptions& o, RunContext& ctx) {
  require_file(o.data, "--data");
  Dataset ds = load_dataset(o.data);
  ctx.add_input(o.data);
  std::vector<std::size_t> train_rows;
  for (std::size_t r = 0; r < ds.size(); ++r)
    if (ds.splits[r] == Split::kTrain) train_rows.push_back(r);
  if (train_rows.empty()) throw InsufficientDataError("dataset has no train rows");
  const DenseMatrix x = ds.rows_with(Split::kTrain);

  Rng init_rng = Rng::for_stream(o.seed, 0x1417);
  std::unique_ptr<Model> init;
  if (o.model == "flow") {
    CouplingFlowHyper h;
    h.dim = ds.dim();
    h.blocks = o.blocks;
    h.hidden = o.hidden;
    h.clamp = o.clamp;
    init = std::make_unique<CouplingFlowModel>(CouplingFlowModel::random(h, init_rng, o.init_scale));
  } else if (o.model == "gaussian") {
    init = std::make_unique<DiagGaussianModel>(DiagGaussianModel::standard(ds.dim()));
  } else {
    throw DomainError("unknown model '" + o.model + "' (expected flow or gaussian)");
  }

  TrainConfig cfg;
  cfg.epochs = o.epochs;
  cfg.batch_size = o.batch_size;
  cfg.learning_rate = o.lr;
  cfg.fit_fraction = o.fit_fraction;
  cfg.seed = o.seed;
  const auto dir = prepare_out(o.out);
  TrainResult res = train(*init, x, cfg);

  for (std::size_t idx : res.fit_indices) ds.splits[train_rows[idx]] = Split::kFit;
  const auto model_path = dir / "model.json";
  save_checkpoint(*res.model, model_path);
  ctx.add_artifact(model_path);
  ctx.describe_artifact(model_path);

  const auto data_path = dir / "dataset.dmat";
  save_dataset(ds, data_path);
  ctx.add_artifact(data_path);
  ctx.describe_artifact(data_path);

  std::ostringstream curve;
  curve << "epoch,mean_loglik\n";
  curve << "0," << fmt_double(res.initial_mean_loglik) << "\n";
  for (std::size_t e = 0; e < res.loss_curve.size(); ++e) curve << e + 1 << "," << fmt_double(res.loss_curve[e]) << "\n";
  const auto curve_path = dir / "loss_curve.csv";
  write_text(curve_path, curve.str());
  ctx.add_artifact(curve_path);
  ctx.describe_artifact(curve_path, {{"model_checksum", res.model->checksum()},
                                     {"train_rows", res.train_indices.size()},
                                     {"fit_rows", res.fit_indices.size()}});
  ctx.write_manifest(dir);
  ctx.out() << "trained " << res.model->kind() << " on " << res.train_indices.size() << " rows; mean loglik "
            << fmt_double(res.initial_mean_loglik) << " -> "
            << fmt_double(res.loss_curve.empty() ? res.initial_mean_loglik : res.loss_curve.back()) << "\n";
  return kExitOk;
}

int cmd_features(const FeaturesOptions& o, RunContext& ctx) {
  require_file(o.model, "--model");
  require_file(o.data, "--data");
  const auto model = load_checkpoint(o.model);
  ctx.add_input(o.model);
  const Dataset ds = load_dataset(o.data);
  ctx.add_input(o.data);
  const DenseMatrix x = select_split(ds, o.split);
  const std::size_t cap = o.max_batches == 0 ? std::numeric_limits<std::size_t>::max() : o.max_batches;
  const DenseMatrix raw = batch_feature_matrix(*model, x, o.batch_size, cap);
  if (raw.rows() == 0) throw InsufficientDataError("split '" + o.split + "' has fewer rows than one batch");

  FeatureCacheMeta meta;
  meta.model_checksum = model->checksum();
  meta.batch_size = o.batch_size;
  meta.floor = o.floor;
  meta.data_id = ds.name + ":" + o.split;
  for (const auto& layer : model->params().layers()) meta.layer_names.push_back(layer.name);
  const auto dir = prepare_out(o.out);
  const auto path = dir / "features.csv";
  write_feature_cache(path, raw, meta);
  ctx.add_artifact(path);
  ctx.describe_artifact(path);
  ctx.write_manifest(dir);
  ctx.out() << "wrote " << raw.rows() << " feature rows (" << raw.cols() << " layers)\n";
  return kExitOk;
}

int cmd_fit(const FitOptions& o, RunContext& ctx) {
  require_file(o.features, "--features");
  FeatureCacheMeta meta;
  const DenseMatrix raw = read_feature_cache(o.features, &meta);
  ctx.add_input(o.features);
  const DetectorModel det = fit_detector(log_feature_matrix(raw, meta.floor), meta.model_checksum);
  const auto dir = prepare_out(o.out);
  const auto path = dir / "detector.json";
  save_detector(det, path);
  ctx.add_artifact(path);
  ctx.describe_artifact(path);
  ctx.write_manifest(dir);
  ctx.out() << "fitted detector on " << det.n_fit << " batches";
  if (!det.floored_layers.empty()) ctx.out() << " (" << det.floored_layers.size() << " layers at variance floor)";
  ctx.out() << "\n";
  return kExitOk;
}

int cmd_score(const ScoreOptions& o, RunContext& ctx) {
  const Method method = parse_method(o.method);
  std::vector<double> scores;
  json extra = {{"method", o.method}};
  if (method == Method::kOurs || method == Method::kFisher) {
    require_file(o.detector, "--detector");
    require_file(o.features, "--features");
    const DetectorModel det = load_detector(o.detector);
    ctx.add_input(o.detector);
    FeatureCacheMeta meta;
    const DenseMatrix raw = read_feature_cache(o.features, &meta);
    ctx.add_input(o.features);
    if (!det.model_checksum.empty() && det.model_checksum != meta.model_checksum) {
      throw DomainError("detector was fitted for model " + det.model_checksum + " but features come from model " +
                        meta.model_checksum);
    }
    const DenseMatrix logs = log_feature_matrix(raw, meta.floor);
    scores = method == Method::kOurs ? ood_scores(det, logs) : fisher_method_scores(det, logs);
    extra["model_checksum"] = meta.model_checksum;
    extra["batch_size"] = meta.batch_size;
  } else {
    require_file(o.model, "--model");
    require_file(o.data, "--data");
    const auto model = load_checkpoint(o.model);
    ctx.add_input(o.model);
    const Dataset ds = load_dataset(o.data);
    ctx.add_input(o.data);
    if (o.batch_size == 0) throw DomainError("--batch-size must be positive");
    const DenseMatrix x = select_split(ds, o.split);
    std::optional<TypicalityModel> typ;
    if (method == Method::kTypicality) {
      const std::string fit_path = o.fit_data.empty() ? o.data : o.fit_data;
      require_file(fit_path, "--fit-data");
      const Dataset fit_ds = load_dataset(fit_path);
      if (!o.fit_data.empty()) ctx.add_input(fit_path);
      const DenseMatrix fit_rows = fit_ds.rows_with(Split::kFit);
      if (fit_rows.rows() == 0) throw InsufficientDataError("fit dataset has no rows tagged fit");
      typ = fit_typicality(*model, fit_rows);
      extra["h_hat"] = typ->h_hat;
    }
    for (std::size_t start = 0; start + o.batch_size <= x.rows(); start += o.batch_size) {
      const DenseMatrix batch = x.slice_rows(start, start + o.batch_size);
      scores.push_back(typ ? typicality_score(*typ, *model, batch) : likelihood_score(*model, batch));
    }
    extra["model_checksum"] = model->checksum();
    extra["batch_size"] = o.batch_size;
  }
  const auto dir = prepare_out(o.out);
  const auto path = dir / "scores.csv";
  write_scores_csv(path, scores);
  ctx.add_artifact(path);
  ctx.describe_artifact(path, extra);
  ctx.write_manifest(dir);
  ctx.out() << "wrote " << scores.size() << " " << o.method << " scores\n";
  return kExitOk;
}

int cmd_eval(const EvalOptions& o, RunContext& ctx) {
  if (!o.in_scores.empty() || !o.ood_scores.empty()) {
    require_file(o.in_scores, "--in-scores");
    require_file(o.ood_scores, "--ood-scores");
    const auto in = read_scores_csv(o.in_scores);
    ctx.add_input(o.in_scores);
    const auto out = read_scores_csv(o.ood_scores);
    ctx.add_input(o.ood_scores);
    const json doc = {{"auroc", auroc(in, out)}, {"n_in", in.size()}, {"n_out", out.size()}};
    const auto dir = prepare_out(o.out);
    write_json(dir / "auroc.json", doc);
    ctx.add_artifact(dir / "auroc.json");
    ctx.describe_artifact(dir / "auroc.json");
    ctx.write_manifest(dir);
    ctx.out() << doc.dump() << "\n";
    return kExitOk;
  }

  std::vector<DistributionEntry> dists;
  for (const auto& spec : o.train) {
    auto [name, dir] = split_named(spec, "--train");
    const fs::path model_path = fs::path(dir) / "model.json";
    const fs::path data_path = fs::path(dir) / "dataset.dmat";
    require_file(model_path.string(), "--train");
    require_file(data_path.string(), "--train");
    DistributionEntry e;
    e.id = name;
    e.model = std::shared_ptr<const Model>(load_checkpoint(model_path));
    ctx.add_input(model_path);
    const Dataset ds = load_dataset(data_path);
    ctx.add_input(data_path);
    e.fit_split = ds.rows_with(Split::kFit);
    e.eval_split = ds.rows_with(Split::kEval);
    dists.push_back(std::move(e));
  }
  for (const auto& spec : o.test) {
    auto [name, path] = split_named(spec, "--test");
    require_file(path, "--test");
    const Dataset ds = load_dataset(path);
    ctx.add_input(path);
    DistributionEntry e;
    e.id = name;
    e.eval_split = ds.count(Split::kEval) > 0 ? ds.rows_with(Split::kEval) : ds.points;
    e.test_only = true;
    dists.push_back(std::move(e));
  }
  for (std::size_t i = 0; i < dists.size(); ++i)
    for (std::size_t j = 0; j < i; ++j)
      if (dists[i].id == dists[j].id) throw DomainError("duplicate distribution name '" + dists[i].id + "'");

  PairingConfig cfg;
  cfg.methods.clear();
  for (const auto& m : o.methods) cfg.methods.push_back(parse_method(m));
  cfg.batch_sizes = o.batch_sizes;
  cfg.n_eval_batches = o.n_eval_batches;
  cfg.seed = o.seed;
  const PairingReport report = run_pairings(dists, cfg);

  const auto dir = prepare_out(o.out);
  write_json(dir / "report.json", report_to_json(report));
  ctx.add_artifact(dir / "report.json");
  ctx.describe_artifact(dir / "report.json");
  const std::string grid = render_text_grid(report);
  write_text(dir / "grid.txt", grid);
  ctx.add_artifact(dir / "grid.txt");
  ctx.describe_artifact(dir / "grid.txt");
  ctx.write_manifest(dir);
  ctx.out() << grid;
  return kExitOk;
}

int cmd_fim_probe(const FimProbeOptions& o, RunContext& ctx) {
  require_file(o.model, "--model");
  const auto model = load_checkpoint(o.model);
  ctx.add_input(o.model);
  std::vector<std::size_t> layers = o.layers;
  if (layers.empty()) {
    layers.push_back(0);
    if (model->params().layer_count() > 1) layers.push_back(1);
  }
  Rng rng(o.seed, 0xF1);
  const auto subset = select_weight_subset(model->params(), layers, rng, o.weights_per_layer);
  const FimSlice slice = mc_fim_slice(*model, rng, subset, o.n);
  const DenseMatrix normalized = normalize_fim(slice);
  const DominanceStats dom = diag_dominance(slice.matrix());

  const auto dir = prepare_out(o.out);
  const auto path = dir / "fim.csv";
  write_matrix_csv(path, slice.matrix());
  ctx.add_artifact(path);
  const auto npath = dir / "fim_normalized.csv";
  write_matrix_csv(npath, normalized);
  ctx.add_artifact(npath);
  ctx.describe_artifact(npath, {{"normalization", "C_ab = F_ab / sqrt(F_aa F_bb)"}, {"source", "fim.csv"}});

  json weights = json::array();
  for (const auto& w : subset) {
    weights.push_back({{"layer", w.layer}, {"layer_name", model->params().layer(w.layer).name}, {"offset", w.offset}});
  }
  const json dominance = {{"diag_mean", dom.diag_mean}, {"offdiag_mean", dom.offdiag_mean}, {"ratio", dom.ratio()}};
  ctx.describe_artifact(path, {{"weights", weights},
                               {"n_samples", slice.n_samples()},
                               {"model_checksum", model->checksum()},
                               {"dominance", dominance}});
  ctx.write_manifest(dir);
  ctx.out() << json{{"size", slice.size()}, {"n_samples", slice.n_samples()}, {"dominance", dominance}}.dump() << "\n";
  return kExitOk;
}

int cmd_invariance_check(const InvarianceOptions& o, RunContext& ctx) {
  if (o.points == 0) throw DomainError("--points must be positive");
  Rng rng(o.seed, 0x1A7);
  std::vector<std::unique_ptr<Model>> models;
  if (!o.model.empty()) {
    require_file(o.model, "--model");
    models.push_back(load_checkpoint(o.model));
    ctx.add_input(o.model);
  } else {
    for (int i = 0; i < 3; ++i) models.push_back(random_model(o.model_kind, o.dim, rng));
  }
  const std::size_t dim = models.front()->dim();

  json per_transform = json::object();
  double worst_grad = 0.0;
  double worst_gap = 0.0;
  for (const auto& name : o.transforms) {
    double grad = 0.0;
    double gap = 0.0;
    for (const auto& model : models) {
      const InvertibleTransform t = named_transform(name, dim, rng);
      for (std::size_t p = 0; p < o.points; ++p) {
        const auto x = sample_point(name, dim, rng);
        const InvarianceCheck c = check_gradient_invariance(*model, t, x);
        grad = std::max(grad, c.max_grad_discrepancy);
        gap = std::max(gap, c.value_gap_error);
      }
    }
    per_transform[name] = {{"max_grad_discrepancy", grad}, {"max_value_gap_error", gap}};
    worst_grad = std::max(worst_grad, grad);
    worst_gap = std::max(worst_gap, gap);
  }
  const bool pass = worst_grad <= o.grad_tol && worst_gap <= o.value_tol;
  const json doc = {
      {"inputs",
       {{"model", o.model.empty() ? json(o.model_kind + " (random)") : json(o.model)},
        {"model_count", models.size()},
        {"dim", dim},
        {"transforms", o.transforms},
        {"points", o.points},
        {"seed", o.seed}}},
      {"results",
       {{"per_transform", per_transform}, {"max_grad_discrepancy", worst_grad}, {"max_value_gap_error", worst_gap}}},
      {"tolerances", {{"grad", o.grad_tol}, {"value_gap", o.value_tol}}},
      {"pass", pass}};
  ctx.out() << doc.dump(2) << "\n";
  if (!o.out.empty()) {
    const auto dir = prepare_out(o.out);
    write_json(dir / "invariance.json", doc);
    ctx.add_artifact(dir / "invariance.json");
    ctx.describe_artifact(dir / "invariance.json");
    ctx.write_manifest(dir);
  }
  return pass ? kExitOk : kExitDomainError;
}

int cmd_tv_volume(const TvVolumeOptions& o, RunContext& ctx) {
  const double log_volume = tv_log_volume(o.alpha, o.d);
  const double log10_volume = tv_log10_volume(o.alpha, o.d);
  bool pass = std::isfinite(log_volume);
  json results = {{"log_volume", log_volume}, {"log10_volume", log10_volume}};
  json tolerances = json::object();
  if (o.mc_samples > 0) {
    Rng rng(o.seed, 0x7F);
    const VolumeEstimate est = tv_volume_mc(o.alpha, o.d, o.mc_samples, rng);
    const double analytic = std::exp(log_volume);
    const double z = est.std_error > 0.0 ? std::abs(est.volume - analytic) / est.std_error
                                         : (est.volume == analytic ? 0.0 : std::numeric_limits<double>::infinity());
    results["mc"] = {{"volume", est.volume},
                     {"std_error", est.std_error},
                     {"hits", est.hits},
                     {"samples", est.samples},
                     {"analytic_volume", analytic},
                     {"z", z}};
    tolerances["mc_std_errors"] = 3.0;
    pass = pass && z <= 3.0;
  }
  if (o.expect_log10) {
    tolerances["log10_volume"] = o.tol;
    results["expected_log10_volume"] = *o.expect_log10;
    pass = pass && std::abs(log10_volume - *o.expect_log10) <= o.tol;
  }
  const json doc = {{"inputs", {{"alpha", o.alpha}, {"d", o.d}, {"mc_samples", o.mc_samples}, {"seed", o.seed}}},
                    {"results", results},
                    {"tolerances", tolerances},
                    {"pass", pass}};
  ctx.out() << doc.dump(2) << "\n";
  if (!o.out.empty()) {
    const auto dir = prepare_out(o.out);
    write_json(dir / "tv_volume.json", doc);
    ctx.add_artifact(dir / "tv_volume.json");
    ctx.describe_artifact(dir / "tv_volume.json");
    ctx.write_manifest(dir);
  }
  return pass ? kExitOk : kExitDomainError;
}

}  // namespace fimscore::cli
