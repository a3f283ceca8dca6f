#include "fimscore/models/model.hpp"

#include "fimscore/errors.hpp"
#include "fimscore/numcore/checksum.hpp"

namespace fimscore {

GradientVector Model::score(std::span<const double> x) const {
  auto grad = GradientVector::zeros_like(params());
  accumulate_score(x, grad);
  return grad;
}

std::string Model::checksum() const {
  Fnv1a h;
  h.update(kind());
  h.update(static_cast<std::uint64_t>(dim()));
  for (const auto& layer : params().layers()) {
    h.update(layer.name);
    for (auto s : layer.shape) h.update(static_cast<std::uint64_t>(s));
    for (double v : layer.values) h.update(v);
  }
  return h.hex();
}

void Model::check_dim(std::span<const double> x) const {
  if (x.size() != dim()) throw DimensionMismatch(std::string(kind()) + " input", dim(), x.size());
}

GradientVector expected_score_mc(const Model& model, Rng& rng, std::size_t n) {
  if (n == 0) throw DomainError("expected_score_mc: n must be >= 1");
  const DenseMatrix draws = model.sample(rng, n);
  auto mean = GradientVector::zeros_like(model.params());
  for (std::size_t i = 0; i < n; ++i) model.accumulate_score(draws.row(i), mean);
  mean *= 1.0 / static_cast<double>(n);
  return mean;
}

}  // namespace fimscore
