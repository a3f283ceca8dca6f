#include "fimscore/evaluation/pairings.hpp"

#include <algorithm>
#include <cstdio>
#include <sstream>

#include "fimscore/baselines/baselines.hpp"
#include "fimscore/detector/detector.hpp"
#include "fimscore/errors.hpp"
#include "fimscore/evaluation/auroc.hpp"
#include "fimscore/gradfeatures/features.hpp"
#include "fimscore/numcore/checksum.hpp"
#include "fimscore/numcore/rng.hpp"

namespace fimscore {

std::string_view method_id(Method m) {
  switch (m) {
    case Method::kOurs:
      return "ours";
    case Method::kFisher:
      return "fisher";
    case Method::kTypicality:
      return "typicality";
    case Method::kLikelihood:
      return "likelihood";
  }
  return "ours";
}

Method parse_method(std::string_view name) {
  for (Method m : all_methods())
    if (method_id(m) == name) return m;
  throw DomainError("unknown method '" + std::string(name) + "'");
}

std::vector<Method> all_methods() { return {Method::kOurs, Method::kFisher, Method::kTypicality, Method::kLikelihood}; }

const PairingCell* PairingReport::find(std::string_view train, std::string_view test, Method m, std::size_t b) const {
  for (const auto& c : cells)
    if (c.train_dist == train && c.test_dist == test && c.method == m && c.batch_size == b) return &c;
  return nullptr;
}

namespace {

struct BatchStats {
  std::vector<double> log_features;
  double mean_loglik = 0.0;
};

// Log-features and mean log-likelihood of each disjoint batch of a seeded shuffle.
std::vector<BatchStats> eval_batches(const Model& model, const DenseMatrix& eval, std::size_t b,
                                     std::size_t n_batches, Rng rng) {
  auto order = rng.permutation(eval.rows());
  const std::size_t count = std::min(n_batches, eval.rows() / b);
  std::vector<BatchStats> out(count);
  auto grad = GradientVector::zeros_like(model.params());
  for (std::size_t k = 0; k < count; ++k) {
    grad.set_zero();
    double ll = 0.0;
    for (std::size_t r = k * b; r < (k + 1) * b; ++r) ll += model.accumulate_score(eval.row(order[r]), grad);
    FeatureVector fv;
    fv.batch_size = b;
    for (std::size_t j = 0; j < grad.layer_count(); ++j) {
      double s = 0.0;
      for (double g : grad.layer(j)) s += g * g;
      fv.values.push_back(s);
    }
    out[k].log_features = log_features(fv).values;
    out[k].mean_loglik = ll / static_cast<double>(b);
  }
  return out;
}

std::uint64_t stream_id(std::string_view test_id, std::size_t b) {
  Fnv1a h;
  h.update(test_id);
  h.update(static_cast<std::uint64_t>(b));
  return h.value();
}

}  // namespace

PairingReport run_pairings(const std::vector<DistributionEntry>& dists, const PairingConfig& cfg) {
  if (dists.size() < 2) throw InsufficientDataError("run_pairings: need at least 2 distributions");
  if (cfg.batch_sizes.empty() || cfg.methods.empty()) throw DomainError("run_pairings: no methods or batch sizes");
  PairingReport report;
  nlohmann::json checksums = nlohmann::json::object();
  for (const auto& d : dists) {
    report.distributions.push_back(d.id);
    if (!d.test_only) report.train_distributions.push_back(d.id);
    checksums[d.id] = d.model ? nlohmann::json(d.model->checksum()) : nlohmann::json(nullptr);
  }
  if (report.train_distributions.empty()) throw InsufficientDataError("run_pairings: every distribution is test-only");
  report.metadata = {{"seed", cfg.seed},
                     {"n_eval_batches", cfg.n_eval_batches},
                     {"batch_sizes", cfg.batch_sizes},
                     {"model_checksums", checksums}};

  for (const auto& train : dists) {
    if (train.test_only) continue;
    for (std::size_t b : cfg.batch_sizes) {
      std::string reason;
      std::optional<DetectorModel> det;
      std::optional<TypicalityModel> typ;
      std::vector<std::vector<double>> scores(dists.size() * cfg.methods.size());
      if (!train.model) {
        reason = train.skip_reason;
      } else {
        try {
          const Model& model = *train.model;
          if (train.fit_split.rows() / b < 2) throw InsufficientDataError("fit split has fewer than 2 batches");
          det = fit_detector(log_feature_matrix(batch_feature_matrix(model, train.fit_split, b)), model.checksum());
          typ = fit_typicality(model, train.fit_split);
          for (std::size_t k = 0; k < dists.size(); ++k) {
            const auto stats = eval_batches(model, dists[k].eval_split, b, cfg.n_eval_batches,
                                            Rng::for_stream(cfg.seed, stream_id(dists[k].id, b)));
            for (std::size_t mi = 0; mi < cfg.methods.size(); ++mi) {
              auto& out = scores[k * cfg.methods.size() + mi];
              for (const auto& s : stats) {
                switch (cfg.methods[mi]) {
                  case Method::kOurs:
                    out.push_back(ood_score(*det, s.log_features));
                    break;
                  case Method::kFisher:
                    out.push_back(fisher_method_score(*det, s.log_features));
                    break;
                  case Method::kTypicality:
                    out.push_back(typicality_score(*typ, s.mean_loglik));
                    break;
                  case Method::kLikelihood:
                    out.push_back(-s.mean_loglik);
                    break;
                }
              }
            }
          }
        } catch (const Error& e) {
          reason = e.what();
        }
      }
      const std::size_t ti = static_cast<std::size_t>(&train - dists.data());
      for (std::size_t k = 0; k < dists.size(); ++k) {
        if (k == ti) continue;
        for (std::size_t mi = 0; mi < cfg.methods.size(); ++mi) {
          PairingCell cell{train.id, dists[k].id, cfg.methods[mi], b, std::nullopt, reason, 0, 0};
          if (reason.empty()) {
            const auto& in = scores[ti * cfg.methods.size() + mi];
            const auto& out = scores[k * cfg.methods.size() + mi];
            cell.n_in = in.size();
            cell.n_out = out.size();
            if (in.empty() || out.empty()) {
              cell.skip_reason = "no eval batches";
            } else {
              cell.auroc = auroc(in, out);
            }
          }
          report.cells.push_back(std::move(cell));
        }
      }
    }
  }
  return report;
}

nlohmann::json report_to_json(const PairingReport& report) {
  auto cells = nlohmann::json::array();
  for (const auto& c : report.cells) {
    nlohmann::json j{{"train", c.train_dist},    {"test", c.test_dist}, {"method", std::string(method_id(c.method))},
                     {"batch_size", c.batch_size}, {"n_in", c.n_in},      {"n_out", c.n_out}};
    j["auroc"] = c.auroc ? nlohmann::json(*c.auroc) : nlohmann::json(nullptr);
    if (!c.auroc) j["skipped"] = c.skip_reason;
    cells.push_back(std::move(j));
  }
  return {{"distributions", report.distributions},
          {"train_distributions", report.train_distributions},
          {"cells", cells},
          {"metadata", report.metadata}};
}

std::string render_text_grid(const PairingReport& report) {
  std::vector<Method> methods;
  std::vector<std::size_t> batch_sizes;
  for (const auto& c : report.cells) {
    if (std::find(methods.begin(), methods.end(), c.method) == methods.end()) methods.push_back(c.method);
    if (std::find(batch_sizes.begin(), batch_sizes.end(), c.batch_size) == batch_sizes.end()) {
      batch_sizes.push_back(c.batch_size);
    }
  }
  std::size_t width = 8;
  for (const auto& d : report.distributions) width = std::max(width, d.size() + 2);
  const auto pad = [width](const std::string& s) { return s + std::string(width > s.size() ? width - s.size() : 1, ' '); };

  std::ostringstream os;
  for (Method m : methods) {
    for (std::size_t b : batch_sizes) {
      os << method_id(m) << " (B = " << b << ")\n";
      os << pad("test \\ train");
      for (const auto& train : report.train_distributions) os << pad(train);
      os << '\n';
      for (const auto& test : report.distributions) {
        os << pad(test);
        for (const auto& train : report.train_distributions) {
          if (train == test) {
            os << pad("-");
            continue;
          }
          const auto* cell = report.find(train, test, m, b);
          if (cell == nullptr || !cell->auroc) {
            os << pad("skip");
          } else {
            char buf[16];
            std::snprintf(buf, sizeof(buf), "%.4f", *cell->auroc);
            os << pad(buf);
          }
        }
        os << '\n';
      }
      os << '\n';
    }
  }
  return os.str();
}

}  // namespace fimscore
