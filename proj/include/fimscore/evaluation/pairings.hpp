#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "fimscore/models/model.hpp"
#include "fimscore/numcore/dense_matrix.hpp"
#include "json.hpp"

namespace fimscore {

enum class Method { kOurs, kFisher, kTypicality, kLikelihood };

std::string_view method_id(Method m);
Method parse_method(std::string_view name);
std::vector<Method> all_methods();

struct DistributionEntry {
  std::string id;
  std::shared_ptr<const Model> model;  // null: this column is skipped
  DenseMatrix fit_split;               // may be empty when model is null
  DenseMatrix eval_split;
  std::string skip_reason = "missing checkpoint";
  bool test_only = false;  // a row of the grid but never a column
};

struct PairingConfig {
  std::vector<Method> methods = all_methods();
  std::vector<std::size_t> batch_sizes{1, 5};
  std::size_t n_eval_batches = 200;
  std::uint64_t seed = 0;
};

struct PairingCell {
  std::string train_dist;
  std::string test_dist;
  Method method = Method::kOurs;
  std::size_t batch_size = 1;
  std::optional<double> auroc;  // empty when skipped
  std::string skip_reason;
  std::size_t n_in = 0;
  std::size_t n_out = 0;
};

struct PairingReport {
  std::vector<std::string> distributions;
  std::vector<std::string> train_distributions;
  std::vector<PairingCell> cells;
  nlohmann::json metadata;

  const PairingCell* find(std::string_view train, std::string_view test, Method m, std::size_t b) const;
};

// For every distribution with a model: fit the detector on log-features of
// disjoint fit-split batches and typicality on the fit rows, score
// n_eval_batches disjoint batches from every distribution's shuffled eval
// split, and report AUROC of (in = own eval scores) vs (out = other's).
// Eval shuffles use a stream derived from (seed, test distribution, B), so a
// cell is a pure function of its inputs.
PairingReport run_pairings(const std::vector<DistributionEntry>& dists, const PairingConfig& cfg);

nlohmann::json report_to_json(const PairingReport& report);
// One grid per (method, B): train distributions as columns, test as rows.
std::string render_text_grid(const PairingReport& report);

}  // namespace fimscore
