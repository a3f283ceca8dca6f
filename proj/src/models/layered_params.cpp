#include "fimscore/models/layered_params.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <set>

#include "fimscore/errors.hpp"

namespace fimscore {

std::size_t shape_size(std::span<const std::size_t> shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

LayeredParams::LayeredParams(std::vector<Layer> layers) : layers_(std::move(layers)) { validate(); }

std::size_t LayeredParams::total_size() const {
  std::size_t n = 0;
  for (const auto& l : layers_) n += l.values.size();
  return n;
}

std::optional<std::size_t> LayeredParams::find(std::string_view name) const {
  for (std::size_t j = 0; j < layers_.size(); ++j)
    if (layers_[j].name == name) return j;
  return std::nullopt;
}

std::vector<double> LayeredParams::flatten() const {
  std::vector<double> flat;
  flat.reserve(total_size());
  for (const auto& l : layers_) flat.insert(flat.end(), l.values.begin(), l.values.end());
  return flat;
}

void LayeredParams::assign_flat(std::span<const double> flat) {
  if (flat.size() != total_size()) throw DimensionMismatch("assign_flat", total_size(), flat.size());
  std::size_t offset = 0;
  for (auto& l : layers_) {
    std::copy_n(flat.begin() + static_cast<std::ptrdiff_t>(offset), l.values.size(), l.values.begin());
    offset += l.values.size();
  }
}

void LayeredParams::validate() const {
  std::set<std::string_view> names;
  for (const auto& l : layers_) {
    if (!names.insert(l.name).second) throw DomainError("duplicate layer name '" + l.name + "'");
    if (shape_size(l.shape) != l.values.size()) {
      throw DimensionMismatch("layer '" + l.name + "' values", shape_size(l.shape), l.values.size());
    }
    if (!std::all_of(l.values.begin(), l.values.end(), [](double v) { return std::isfinite(v); })) {
      throw NonFiniteError("layer '" + l.name + "' holds non-finite values");
    }
  }
  if (total_size() == 0) throw DomainError("model has no parameters");
}

GradientVector GradientVector::zeros_like(const LayeredParams& params) {
  std::vector<std::vector<double>> layers;
  layers.reserve(params.layer_count());
  for (const auto& l : params.layers()) layers.emplace_back(l.values.size(), 0.0);
  return GradientVector(std::move(layers));
}

std::size_t GradientVector::total_size() const {
  std::size_t n = 0;
  for (const auto& l : layers_) n += l.size();
  return n;
}

GradientVector& GradientVector::operator+=(const GradientVector& other) {
  if (other.layers_.size() != layers_.size()) {
    throw DimensionMismatch("GradientVector layers", layers_.size(), other.layers_.size());
  }
  for (std::size_t j = 0; j < layers_.size(); ++j) {
    if (other.layers_[j].size() != layers_[j].size()) {
      throw DimensionMismatch("GradientVector layer " + std::to_string(j), layers_[j].size(),
                              other.layers_[j].size());
    }
    for (std::size_t i = 0; i < layers_[j].size(); ++i) layers_[j][i] += other.layers_[j][i];
  }
  return *this;
}

GradientVector& GradientVector::operator*=(double s) {
  for (auto& l : layers_)
    for (double& v : l) v *= s;
  return *this;
}

void GradientVector::set_zero() {
  for (auto& l : layers_) std::fill(l.begin(), l.end(), 0.0);
}

std::vector<double> GradientVector::flatten() const {
  std::vector<double> flat;
  flat.reserve(total_size());
  for (const auto& l : layers_) flat.insert(flat.end(), l.begin(), l.end());
  return flat;
}

bool GradientVector::all_finite() const {
  for (const auto& l : layers_)
    for (double v : l)
      if (!std::isfinite(v)) return false;
  return true;
}

}  // namespace fimscore
