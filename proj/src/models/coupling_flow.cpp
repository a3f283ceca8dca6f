#include "fimscore/models/coupling_flow.hpp"

#include <cmath>
#include <string>

#include "fimscore/errors.hpp"
#include "fimscore/numcore/special.hpp"

namespace fimscore {

namespace {

enum LayerSlot : std::size_t { kWin = 0, kBin = 1, kWout = 2, kBout = 3 };

std::vector<Layer> zero_layers(const CouplingFlowHyper& h) {
  const std::size_t d = h.dim / 2;
  std::vector<Layer> layers;
  for (std::size_t k = 0; k < h.blocks; ++k) {
    const std::string prefix = "block" + std::to_string(k) + ".";
    layers.push_back({prefix + "w_in", {h.hidden, d}, std::vector<double>(h.hidden * d, 0.0)});
    layers.push_back({prefix + "b_in", {h.hidden}, std::vector<double>(h.hidden, 0.0)});
    layers.push_back({prefix + "w_out", {2 * d, h.hidden}, std::vector<double>(2 * d * h.hidden, 0.0)});
    layers.push_back({prefix + "b_out", {2 * d}, std::vector<double>(2 * d, 0.0)});
  }
  return layers;
}

void check_hyper(const CouplingFlowHyper& h) {
  if (h.dim == 0 || h.dim % 2 != 0) throw DomainError("coupling_flow: dimension must be even and positive");
  if (h.blocks == 0 || h.hidden == 0) throw DomainError("coupling_flow: need at least one block and hidden unit");
  if (!(h.clamp > 0.0)) throw DomainError("coupling_flow: clamp bound must be positive");
}

// Offset of the conditioning half within x for block k; the other half is transformed.
std::size_t cond_offset(std::size_t block, std::size_t d) { return block % 2 == 0 ? 0 : d; }
std::size_t trans_offset(std::size_t block, std::size_t d) { return block % 2 == 0 ? d : 0; }

}  // namespace

struct CouplingFlowModel::BlockCache {
  std::vector<double> input;   // full D-vector entering the block
  std::vector<double> hidden;  // tanh activations
  std::vector<double> raw;     // conditioner output [s | t]
  std::vector<double> log_scale;
};

CouplingFlowModel::CouplingFlowModel(CouplingFlowHyper hyper) : hyper_(hyper) {
  check_hyper(hyper_);
  params_ = LayeredParams(zero_layers(hyper_));
}

CouplingFlowModel::CouplingFlowModel(CouplingFlowHyper hyper, LayeredParams params)
    : hyper_(hyper), params_(std::move(params)) {
  check_hyper(hyper_);
  check_layout();
}

CouplingFlowModel CouplingFlowModel::random(CouplingFlowHyper hyper, Rng& rng, double output_scale) {
  CouplingFlowModel model(hyper);
  const double in_std = 1.0 / std::sqrt(static_cast<double>(hyper.dim / 2));
  for (std::size_t k = 0; k < hyper.blocks; ++k) {
    for (double& w : model.params_.values(4 * k + kWin)) w = in_std * rng.normal();
    for (double& w : model.params_.values(4 * k + kWout)) w = output_scale * rng.normal();
  }
  return model;
}

void CouplingFlowModel::check_layout() const {
  const LayeredParams reference(zero_layers(hyper_));
  if (params_.layer_count() != reference.layer_count()) {
    throw DimensionMismatch("coupling_flow layer count", reference.layer_count(), params_.layer_count());
  }
  for (std::size_t j = 0; j < reference.layer_count(); ++j) {
    const auto& want = reference.layer(j);
    const auto& got = params_.layer(j);
    if (want.name != got.name || want.shape != got.shape) {
      throw DomainError("coupling_flow: layer " + std::to_string(j) + " should be '" + want.name +
                        "' with matching shape, found '" + got.name + "'");
    }
  }
}

void CouplingFlowModel::conditioner(std::size_t block, std::span<const double> a, std::span<double> hidden,
                                    std::span<double> out) const {
  const std::size_t d = half();
  const std::size_t h = hyper_.hidden;
  const auto w_in = params_.values(4 * block + kWin);
  const auto b_in = params_.values(4 * block + kBin);
  const auto w_out = params_.values(4 * block + kWout);
  const auto b_out = params_.values(4 * block + kBout);
  for (std::size_t u = 0; u < h; ++u) {
    double pre = b_in[u];
    for (std::size_t i = 0; i < d; ++i) pre += w_in[u * d + i] * a[i];
    hidden[u] = std::tanh(pre);
  }
  for (std::size_t o = 0; o < 2 * d; ++o) {
    double acc = b_out[o];
    for (std::size_t u = 0; u < h; ++u) acc += w_out[o * h + u] * hidden[u];
    out[o] = acc;
  }
}

CouplingFlowModel::ForwardResult CouplingFlowModel::forward(std::span<const double> x) const {
  check_dim(x);
  const std::size_t d = half();
  ForwardResult res{std::vector<double>(x.begin(), x.end()), 0.0};
  std::vector<double> hidden(hyper_.hidden);
  std::vector<double> raw(2 * d);
  for (std::size_t k = 0; k < hyper_.blocks; ++k) {
    const std::size_t ca = cond_offset(k, d);
    const std::size_t tb = trans_offset(k, d);
    conditioner(k, std::span<const double>(res.z).subspan(ca, d), hidden, raw);
    for (std::size_t i = 0; i < d; ++i) {
      const double ls = hyper_.clamp * std::tanh(raw[i] / hyper_.clamp);
      res.z[tb + i] = res.z[tb + i] * std::exp(ls) + raw[d + i];
      res.log_det += ls;
    }
  }
  return res;
}

std::vector<double> CouplingFlowModel::inverse(std::span<const double> z) const {
  check_dim(z);
  const std::size_t d = half();
  std::vector<double> x(z.begin(), z.end());
  std::vector<double> hidden(hyper_.hidden);
  std::vector<double> raw(2 * d);
  for (std::size_t k = hyper_.blocks; k-- > 0;) {
    const std::size_t ca = cond_offset(k, d);
    const std::size_t tb = trans_offset(k, d);
    conditioner(k, std::span<const double>(x).subspan(ca, d), hidden, raw);
    for (std::size_t i = 0; i < d; ++i) {
      const double ls = hyper_.clamp * std::tanh(raw[i] / hyper_.clamp);
      x[tb + i] = (x[tb + i] - raw[d + i]) * std::exp(-ls);
    }
  }
  return x;
}

std::vector<std::vector<double>> CouplingFlowModel::block_log_scales(std::span<const double> x) const {
  check_dim(x);
  const std::size_t d = half();
  std::vector<double> cur(x.begin(), x.end());
  std::vector<double> hidden(hyper_.hidden);
  std::vector<double> raw(2 * d);
  std::vector<std::vector<double>> out;
  for (std::size_t k = 0; k < hyper_.blocks; ++k) {
    const std::size_t ca = cond_offset(k, d);
    const std::size_t tb = trans_offset(k, d);
    conditioner(k, std::span<const double>(cur).subspan(ca, d), hidden, raw);
    std::vector<double> ls(d);
    for (std::size_t i = 0; i < d; ++i) {
      ls[i] = hyper_.clamp * std::tanh(raw[i] / hyper_.clamp);
      cur[tb + i] = cur[tb + i] * std::exp(ls[i]) + raw[d + i];
    }
    out.push_back(std::move(ls));
  }
  return out;
}

double CouplingFlowModel::log_likelihood(std::span<const double> x) const {
  const auto fwd = forward(x);
  double ll = fwd.log_det;
  for (double v : fwd.z) ll += std_normal_log_pdf(v);
  return ll;
}

double CouplingFlowModel::accumulate_score(std::span<const double> x, GradientVector& grad, double weight) const {
  check_dim(x);
  if (grad.layer_count() != params_.layer_count()) {
    throw DimensionMismatch("coupling_flow gradient layers", params_.layer_count(), grad.layer_count());
  }
  const std::size_t d = half();
  const std::size_t h = hyper_.hidden;
  const double c = hyper_.clamp;

  std::vector<BlockCache> caches(hyper_.blocks);
  std::vector<double> cur(x.begin(), x.end());
  double log_det = 0.0;
  for (std::size_t k = 0; k < hyper_.blocks; ++k) {
    auto& bc = caches[k];
    bc.input = cur;
    bc.hidden.resize(h);
    bc.raw.resize(2 * d);
    bc.log_scale.resize(d);
    const std::size_t ca = cond_offset(k, d);
    const std::size_t tb = trans_offset(k, d);
    conditioner(k, std::span<const double>(bc.input).subspan(ca, d), bc.hidden, bc.raw);
    for (std::size_t i = 0; i < d; ++i) {
      bc.log_scale[i] = c * std::tanh(bc.raw[i] / c);
      cur[tb + i] = cur[tb + i] * std::exp(bc.log_scale[i]) + bc.raw[d + i];
      log_det += bc.log_scale[i];
    }
  }
  double ll = log_det;
  for (double v : cur) ll += std_normal_log_pdf(v);

  // Backward pass. g holds d ll / d (block output) and becomes d ll / d (block input).
  std::vector<double> g(cur.size());
  for (std::size_t i = 0; i < cur.size(); ++i) g[i] = -cur[i];
  std::vector<double> d_raw(2 * d);
  std::vector<double> d_pre(h);
  for (std::size_t k = hyper_.blocks; k-- > 0;) {
    const auto& bc = caches[k];
    const std::size_t ca = cond_offset(k, d);
    const std::size_t tb = trans_offset(k, d);
    for (std::size_t i = 0; i < d; ++i) {
      const double scale = std::exp(bc.log_scale[i]);
      const double gb = g[tb + i];
      const double d_log_scale = gb * bc.input[tb + i] * scale + 1.0;
      const double th = bc.log_scale[i] / c;  // tanh(raw / c)
      d_raw[i] = d_log_scale * (1.0 - th * th);
      d_raw[d + i] = gb;
      g[tb + i] = gb * scale;
    }
    const auto w_in = params_.values(4 * k + kWin);
    const auto w_out = params_.values(4 * k + kWout);
    auto gw_in = grad.layer(4 * k + kWin);
    auto gb_in = grad.layer(4 * k + kBin);
    auto gw_out = grad.layer(4 * k + kWout);
    auto gb_out = grad.layer(4 * k + kBout);
    for (std::size_t o = 0; o < 2 * d; ++o) {
      gb_out[o] += weight * d_raw[o];
      for (std::size_t u = 0; u < h; ++u) gw_out[o * h + u] += weight * d_raw[o] * bc.hidden[u];
    }
    for (std::size_t u = 0; u < h; ++u) {
      double dh = 0.0;
      for (std::size_t o = 0; o < 2 * d; ++o) dh += w_out[o * h + u] * d_raw[o];
      d_pre[u] = dh * (1.0 - bc.hidden[u] * bc.hidden[u]);
      gb_in[u] += weight * d_pre[u];
    }
    for (std::size_t u = 0; u < h; ++u)
      for (std::size_t i = 0; i < d; ++i) gw_in[u * d + i] += weight * d_pre[u] * bc.input[ca + i];
    for (std::size_t i = 0; i < d; ++i) {
      double acc = 0.0;
      for (std::size_t u = 0; u < h; ++u) acc += w_in[u * d + i] * d_pre[u];
      g[ca + i] += acc;
    }
  }
  return ll;
}

DenseMatrix CouplingFlowModel::sample(Rng& rng, std::size_t n) const {
  DenseMatrix out(n, hyper_.dim);
  std::vector<double> z(hyper_.dim);
  for (std::size_t r = 0; r < n; ++r) {
    for (double& v : z) v = rng.normal();
    const auto x = inverse(z);
    std::copy(x.begin(), x.end(), out.row(r).begin());
  }
  return out;
}

}  // namespace fimscore
