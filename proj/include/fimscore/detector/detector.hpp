#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "fimscore/numcore/dense_matrix.hpp"
#include "json.hpp"

namespace fimscore {

inline constexpr double kVarianceFloor = 1e-12;
inline constexpr double kPValueFloor = 1e-300;

// Independent per-layer Gaussians over log-features.
struct DetectorModel {
  std::vector<double> mu;
  std::vector<double> sigma2;
  double floor_used = kVarianceFloor;
  std::size_t n_fit = 0;
  std::string model_checksum;
  std::vector<std::size_t> floored_layers;  // layers whose variance hit the floor

  std::size_t layer_count() const { return mu.size(); }
};

// mu_j = column mean; sigma2_j = max(column variance (divide by N), 1e-12).
DetectorModel fit_detector(const DenseMatrix& log_features, std::string model_checksum = {});

// Joint Gaussian negative log-likelihood:
//   S = sum_j [ 0.5 ln(2 pi sigma2_j) + (row_j - mu_j)^2 / (2 sigma2_j) ].
double ood_score(const DetectorModel& det, std::span<const double> log_feature_row);

// Fisher's method over two-tailed per-layer p-values:
//   z_j = (row_j - mu_j) / sigma_j, q_j = max(min(Phi(z_j), 1 - Phi(z_j)), 1e-300),
//   S = -sum_j ln q_j.
double fisher_method_score(const DetectorModel& det, std::span<const double> log_feature_row);

std::vector<double> ood_scores(const DetectorModel& det, const DenseMatrix& log_features);
std::vector<double> fisher_method_scores(const DetectorModel& det, const DenseMatrix& log_features);

// {"mu": [...], "sigma2": [...], "n_fit": N, "model_checksum": "..."} plus
// "floor_used" and "floored_layers".
nlohmann::json detector_to_json(const DetectorModel& det);
DetectorModel detector_from_json(const nlohmann::json& doc);
void save_detector(const DetectorModel& det, const std::filesystem::path& path);
DetectorModel load_detector(const std::filesystem::path& path);

// Score CSV: "batch_id,score".
void write_scores_csv(const std::filesystem::path& path, std::span<const double> scores);
std::vector<double> read_scores_csv(const std::filesystem::path& path);

}  // namespace fimscore
