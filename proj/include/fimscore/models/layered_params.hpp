#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace fimscore {

struct Layer {
  std::string name;
  std::vector<std::size_t> shape;
  std::vector<double> values;

  friend bool operator==(const Layer&, const Layer&) = default;
};

std::size_t shape_size(std::span<const std::size_t> shape);

// Model parameters partitioned into named layers theta_1..theta_J.
// Invariants: unique names, values.size() == product(shape), P > 0, finite.
class LayeredParams {
 public:
  LayeredParams() = default;
  explicit LayeredParams(std::vector<Layer> layers);

  std::size_t layer_count() const { return layers_.size(); }
  std::size_t total_size() const;

  const Layer& layer(std::size_t j) const { return layers_.at(j); }
  std::span<double> values(std::size_t j) { return layers_.at(j).values; }
  std::span<const double> values(std::size_t j) const { return layers_.at(j).values; }
  const std::vector<Layer>& layers() const { return layers_; }
  std::optional<std::size_t> find(std::string_view name) const;

  std::vector<double> flatten() const;
  void assign_flat(std::span<const double> flat);

  void validate() const;

  friend bool operator==(const LayeredParams&, const LayeredParams&) = default;

 private:
  std::vector<Layer> layers_;
};

// Per-layer gradient of the log-likelihood, shape-congruent to LayeredParams.
class GradientVector {
 public:
  GradientVector() = default;
  explicit GradientVector(std::vector<std::vector<double>> layers) : layers_(std::move(layers)) {}
  static GradientVector zeros_like(const LayeredParams& params);

  std::size_t layer_count() const { return layers_.size(); }
  std::size_t total_size() const;
  std::span<double> layer(std::size_t j) { return layers_.at(j); }
  std::span<const double> layer(std::size_t j) const { return layers_.at(j); }

  GradientVector& operator+=(const GradientVector& other);
  GradientVector& operator*=(double s);
  void set_zero();

  std::vector<double> flatten() const;
  bool all_finite() const;

  friend bool operator==(const GradientVector&, const GradientVector&) = default;

 private:
  std::vector<std::vector<double>> layers_;
};

}  // namespace fimscore
