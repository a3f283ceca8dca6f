#include "fimscore/gradfeatures/features.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "fimscore/errors.hpp"
#include "json.hpp"

namespace fimscore {

FeatureVector gradient_features(const Model& model, const DenseMatrix& batch) {
  if (batch.rows() == 0) throw InsufficientDataError("gradient_features: empty batch");
  if (batch.cols() != model.dim()) throw DimensionMismatch("gradient_features batch", model.dim(), batch.cols());
  auto v = GradientVector::zeros_like(model.params());
  for (std::size_t b = 0; b < batch.rows(); ++b) model.accumulate_score(batch.row(b), v);

  FeatureVector fv;
  fv.batch_size = batch.rows();
  fv.model_id = model.checksum();
  fv.values.resize(v.layer_count());
  for (std::size_t j = 0; j < v.layer_count(); ++j) {
    double s = 0.0;
    for (double g : v.layer(j)) s += g * g;
    if (!std::isfinite(s)) {
      throw NonFiniteError("gradient_features: non-finite gradient in layer '" + model.params().layer(j).name + "'");
    }
    fv.values[j] = s;
  }
  return fv;
}

LogFeatures log_features(const FeatureVector& fv, double floor) {
  if (!(floor > 0.0)) throw DomainError("log_features: floor must be positive");
  LogFeatures out;
  out.values.resize(fv.values.size());
  for (std::size_t j = 0; j < fv.values.size(); ++j) {
    if (fv.values[j] < floor) out.floored_layers.push_back(j);
    out.values[j] = std::log(std::max(fv.values[j], floor));
  }
  return out;
}

DenseMatrix batch_feature_matrix(const Model& model, const DenseMatrix& data, std::size_t batch_size,
                                 std::size_t max_batches) {
  if (batch_size == 0) throw DomainError("batch_feature_matrix: batch size must be >= 1");
  const std::size_t n_batches = std::min(max_batches, data.rows() / batch_size);
  DenseMatrix out(n_batches, model.params().layer_count());
  for (std::size_t b = 0; b < n_batches; ++b) {
    const auto fv = gradient_features(model, data.slice_rows(b * batch_size, (b + 1) * batch_size));
    std::copy(fv.values.begin(), fv.values.end(), out.row(b).begin());
  }
  return out;
}

DenseMatrix log_feature_matrix(const DenseMatrix& raw, double floor) {
  DenseMatrix out = raw;
  for (double& v : out.data()) v = std::log(std::max(v, floor));
  return out;
}

CorrelationProfile layer_correlation_profile(const DenseMatrix& features) {
  const std::size_t n = features.rows();
  const std::size_t j_count = features.cols();
  if (n < 3) throw InsufficientDataError("layer_correlation_profile: need at least 3 rows");

  std::vector<std::vector<double>> centred(j_count);
  std::vector<double> norm(j_count, 0.0);
  CorrelationProfile prof;
  for (std::size_t j = 0; j < j_count; ++j) {
    auto col = features.column(j);
    double mean = 0.0;
    for (double v : col) mean += v;
    mean /= static_cast<double>(n);
    for (double& v : col) v -= mean;
    for (double v : col) norm[j] += v * v;
    norm[j] = std::sqrt(norm[j]);
    if (!(norm[j] > 0.0)) prof.excluded_layers.push_back(j);
    centred[j] = std::move(col);
  }
  const auto excluded = [&](std::size_t j) {
    return std::find(prof.excluded_layers.begin(), prof.excluded_layers.end(), j) != prof.excluded_layers.end();
  };

  const std::size_t n_dist = j_count > 0 ? j_count - 1 : 0;
  std::vector<double> sums(n_dist, 0.0);
  prof.pair_counts.assign(n_dist, 0);
  for (std::size_t i = 0; i < j_count; ++i) {
    if (excluded(i)) continue;
    for (std::size_t j = i + 1; j < j_count; ++j) {
      if (excluded(j)) continue;
      const double r = dot(centred[i], centred[j]) / (norm[i] * norm[j]);
      sums[j - i - 1] += r;
      ++prof.pair_counts[j - i - 1];
    }
  }
  prof.mean_by_distance.resize(n_dist);
  for (std::size_t d = 0; d < n_dist; ++d) {
    prof.mean_by_distance[d] = prof.pair_counts[d] > 0 ? sums[d] / static_cast<double>(prof.pair_counts[d])
                                                       : std::numeric_limits<double>::quiet_NaN();
  }
  return prof;
}

namespace {

std::string format_double(double v) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

}  // namespace

void write_feature_cache(const std::filesystem::path& path, const DenseMatrix& raw, const FeatureCacheMeta& meta) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << "batch_id";
  for (std::size_t j = 0; j < raw.cols(); ++j) out << ",layer_" << j;
  out << '\n';
  for (std::size_t r = 0; r < raw.rows(); ++r) {
    out << r;
    for (double v : raw.row(r)) out << ',' << format_double(v);
    out << '\n';
  }
  const nlohmann::json side{{"model_checksum", meta.model_checksum},
                            {"batch_size", meta.batch_size},
                            {"floor", meta.floor},
                            {"data_id", meta.data_id},
                            {"layer_names", meta.layer_names},
                            {"n_batches", raw.rows()},
                            {"values", "raw squared L2 norms (not logs)"}};
  std::ofstream sc(path.string() + ".json");
  if (!sc) throw IoError("cannot write " + path.string() + ".json");
  sc << side.dump(1) << '\n';
}

DenseMatrix read_feature_cache(const std::filesystem::path& path, FeatureCacheMeta* meta) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line) || line.rfind("batch_id", 0) != 0) {
    throw ParseError(path.string() + ": expected header starting with batch_id");
  }
  const auto cols = static_cast<std::size_t>(std::count(line.begin(), line.end(), ','));
  DenseMatrix out(0, cols);
  std::vector<double> row(cols);
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    std::getline(ss, cell, ',');  // batch id
    for (std::size_t c = 0; c < cols; ++c) {
      if (!std::getline(ss, cell, ',')) {
        throw ParseError(path.string() + ": line " + std::to_string(line_no) + " has too few columns");
      }
      const auto res = std::from_chars(cell.data(), cell.data() + cell.size(), row[c]);
      if (res.ec != std::errc() || res.ptr != cell.data() + cell.size()) {
        throw ParseError(path.string() + ": non-numeric cell at line " + std::to_string(line_no) + ", col " +
                         std::to_string(c + 1));
      }
    }
    out.append_row(row);
  }
  if (meta != nullptr) {
    std::ifstream sc(path.string() + ".json");
    if (sc) {
      const auto side = nlohmann::json::parse(sc);
      meta->model_checksum = side.value("model_checksum", std::string());
      meta->batch_size = side.value("batch_size", std::size_t{0});
      meta->floor = side.value("floor", kDefaultFeatureFloor);
      meta->data_id = side.value("data_id", std::string());
      meta->layer_names = side.value("layer_names", std::vector<std::string>{});
    }
  }
  return out;
}

}  // namespace fimscore
