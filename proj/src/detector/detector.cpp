#include "fimscore/detector/detector.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numbers>

#include "fimscore/errors.hpp"
#include "fimscore/numcore/special.hpp"

namespace fimscore {

namespace {

void check_row(const DetectorModel& det, std::span<const double> row) {
  if (row.size() != det.layer_count()) throw DimensionMismatch("detector row", det.layer_count(), row.size());
}

}  // namespace

DetectorModel fit_detector(const DenseMatrix& log_features, std::string model_checksum) {
  const std::size_t n = log_features.rows();
  if (n < 2) throw InsufficientDataError("fit_detector: need at least 2 feature rows, got " + std::to_string(n));
  DetectorModel det;
  det.n_fit = n;
  det.model_checksum = std::move(model_checksum);
  const std::size_t j_count = log_features.cols();
  det.mu.resize(j_count);
  det.sigma2.resize(j_count);
  for (std::size_t j = 0; j < j_count; ++j) {
    double mean = 0.0;
    for (std::size_t i = 0; i < n; ++i) mean += log_features(i, j);
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (std::size_t i = 0; i < n; ++i) var += (log_features(i, j) - mean) * (log_features(i, j) - mean);
    var /= static_cast<double>(n);
    if (!std::isfinite(mean) || !std::isfinite(var)) {
      throw NonFiniteError("fit_detector: non-finite statistics in layer " + std::to_string(j));
    }
    det.mu[j] = mean;
    if (var < kVarianceFloor) {
      var = kVarianceFloor;
      det.floored_layers.push_back(j);
    }
    det.sigma2[j] = var;
  }
  return det;
}

double ood_score(const DetectorModel& det, std::span<const double> row) {
  check_row(det, row);
  double s = 0.0;
  for (std::size_t j = 0; j < row.size(); ++j) {
    const double u = row[j] - det.mu[j];
    s += 0.5 * std::log(2.0 * std::numbers::pi * det.sigma2[j]) + u * u / (2.0 * det.sigma2[j]);
  }
  return s;
}

double fisher_method_score(const DetectorModel& det, std::span<const double> row) {
  check_row(det, row);
  double s = 0.0;
  for (std::size_t j = 0; j < row.size(); ++j) {
    // q = min(Phi(z), 1 - Phi(z)) = Phi(-|z|), computed on the lower tail for accuracy.
    const double z = (row[j] - det.mu[j]) / std::sqrt(det.sigma2[j]);
    const double q = std::max(std_normal_cdf(-std::abs(z)), kPValueFloor);
    s -= std::log(q);
  }
  return s;
}

std::vector<double> ood_scores(const DetectorModel& det, const DenseMatrix& log_features) {
  std::vector<double> out(log_features.rows());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = ood_score(det, log_features.row(i));
  return out;
}

std::vector<double> fisher_method_scores(const DetectorModel& det, const DenseMatrix& log_features) {
  std::vector<double> out(log_features.rows());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = fisher_method_score(det, log_features.row(i));
  return out;
}

nlohmann::json detector_to_json(const DetectorModel& det) {
  return {{"mu", det.mu},
          {"sigma2", det.sigma2},
          {"n_fit", det.n_fit},
          {"model_checksum", det.model_checksum},
          {"floor_used", det.floor_used},
          {"floored_layers", det.floored_layers}};
}

DetectorModel detector_from_json(const nlohmann::json& doc) {
  try {
    DetectorModel det;
    det.mu = doc.at("mu").get<std::vector<double>>();
    det.sigma2 = doc.at("sigma2").get<std::vector<double>>();
    det.n_fit = doc.at("n_fit").get<std::size_t>();
    det.model_checksum = doc.value("model_checksum", std::string());
    det.floor_used = doc.value("floor_used", kVarianceFloor);
    det.floored_layers = doc.value("floored_layers", std::vector<std::size_t>{});
    if (det.mu.size() != det.sigma2.size()) throw DimensionMismatch("detector sigma2", det.mu.size(), det.sigma2.size());
    for (double v : det.sigma2)
      if (!(v > 0.0)) throw ParseError("detector: sigma2 entries must be positive");
    return det;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("detector: malformed document: ") + e.what());
  }
}

void save_detector(const DetectorModel& det, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << detector_to_json(det).dump(1) << '\n';
}

DetectorModel load_detector(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  try {
    return detector_from_json(nlohmann::json::parse(in));
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

void write_scores_csv(const std::filesystem::path& path, std::span<const double> scores) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << "batch_id,score\n";
  char buf[32];
  for (std::size_t i = 0; i < scores.size(); ++i) {
    auto res = std::to_chars(buf, buf + sizeof(buf), scores[i]);
    out << i << ',' << std::string_view(buf, static_cast<std::size_t>(res.ptr - buf)) << '\n';
  }
}

std::vector<double> read_scores_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line) || line != "batch_id,score") throw ParseError(path.string() + ": bad score header");
  std::vector<double> scores;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto comma = line.find(',');
    double v = 0.0;
    const char* first = line.data() + (comma == std::string::npos ? line.size() : comma + 1);
    const auto res = std::from_chars(first, line.data() + line.size(), v);
    if (comma == std::string::npos || res.ec != std::errc() || res.ptr != line.data() + line.size()) {
      throw ParseError(path.string() + ": bad score at line " + std::to_string(line_no));
    }
    scores.push_back(v);
  }
  return scores;
}

}  // namespace fimscore
