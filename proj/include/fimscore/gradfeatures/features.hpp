#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <vector>

#include "fimscore/models/model.hpp"
#include "fimscore/numcore/dense_matrix.hpp"

namespace fimscore {

inline constexpr double kDefaultFeatureFloor = 1e-300;

// Layer-wise squared L2 norms f_j of the score of a summed batch objective.
struct FeatureVector {
  std::vector<double> values;  // J entries, model layer order, >= 0
  std::size_t batch_size = 0;
  std::string model_id;
  std::string data_id;
};

struct LogFeatures {
  std::vector<double> values;
  std::vector<std::size_t> floored_layers;  // layers where f_j < floor
};

// v = grad_theta sum_b log p(x_b), one accumulation over the whole batch;
// f_j = ||v restricted to layer j||^2. Throws NonFiniteError naming the layer.
FeatureVector gradient_features(const Model& model, const DenseMatrix& batch);

LogFeatures log_features(const FeatureVector& fv, double floor = kDefaultFeatureFloor);

// Features of consecutive disjoint batches of `batch_size` rows; a trailing
// partial batch is dropped. Row r of the result holds batch r's f_1..f_J.
DenseMatrix batch_feature_matrix(const Model& model, const DenseMatrix& data, std::size_t batch_size,
                                 std::size_t max_batches = static_cast<std::size_t>(-1));

// Elementwise ln(max(f, floor)).
DenseMatrix log_feature_matrix(const DenseMatrix& raw, double floor = kDefaultFeatureFloor);

struct CorrelationProfile {
  // mean_by_distance[d - 1] = mean Pearson correlation over layer pairs at
  // distance d; NaN when every pair at that distance was excluded.
  std::vector<double> mean_by_distance;
  std::vector<std::size_t> pair_counts;
  std::vector<std::size_t> excluded_layers;  // zero-variance columns
};

CorrelationProfile layer_correlation_profile(const DenseMatrix& log_features);

// Feature cache: CSV "batch_id,layer_0,...,layer_{J-1}" with raw f_j, plus a
// JSON sidecar <path>.json holding model checksum, batch size and floor.
struct FeatureCacheMeta {
  std::string model_checksum;
  std::size_t batch_size = 0;
  double floor = kDefaultFeatureFloor;
  std::string data_id;
  std::vector<std::string> layer_names;
};

void write_feature_cache(const std::filesystem::path& path, const DenseMatrix& raw, const FeatureCacheMeta& meta);
DenseMatrix read_feature_cache(const std::filesystem::path& path, FeatureCacheMeta* meta = nullptr);

}  // namespace fimscore
