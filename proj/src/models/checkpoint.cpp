#include "fimscore/models/checkpoint.hpp"

#include <fstream>

#include "fimscore/errors.hpp"
#include "fimscore/models/coupling_flow.hpp"
#include "fimscore/models/diag_gaussian.hpp"

namespace fimscore {

nlohmann::json checkpoint_to_json(const Model& model) {
  nlohmann::json doc;
  doc["type"] = std::string(model.kind());
  doc["dims"] = model.dim();
  doc["hyper"] = nlohmann::json::object();
  if (const auto* flow = dynamic_cast<const CouplingFlowModel*>(&model)) {
    doc["hyper"] = {{"K", flow->hyper().blocks}, {"H", flow->hyper().hidden}, {"c", flow->hyper().clamp}};
  } else if (dynamic_cast<const DiagGaussianModel*>(&model) == nullptr) {
    throw DomainError("checkpoint: unsupported model kind '" + std::string(model.kind()) + "'");
  }
  auto layers = nlohmann::json::array();
  for (const auto& layer : model.params().layers()) {
    layers.push_back({{"name", layer.name}, {"shape", layer.shape}, {"values", layer.values}});
  }
  doc["layers"] = std::move(layers);
  return doc;
}

std::unique_ptr<Model> checkpoint_from_json(const nlohmann::json& doc) {
  try {
    const auto type = doc.at("type").get<std::string>();
    const auto dims = doc.at("dims").get<std::size_t>();
    std::vector<Layer> layers;
    for (const auto& l : doc.at("layers")) {
      layers.push_back(Layer{l.at("name").get<std::string>(), l.at("shape").get<std::vector<std::size_t>>(),
                             l.at("values").get<std::vector<double>>()});
    }
    LayeredParams params(std::move(layers));
    if (type == DiagGaussianModel::kKind) {
      auto model = std::make_unique<DiagGaussianModel>(std::move(params));
      if (model->dim() != dims) throw DimensionMismatch("checkpoint dims", dims, model->dim());
      return model;
    }
    if (type == CouplingFlowModel::kKind) {
      const auto& h = doc.at("hyper");
      CouplingFlowHyper hyper{dims, h.at("K").get<std::size_t>(), h.at("H").get<std::size_t>(),
                              h.at("c").get<double>()};
      return std::make_unique<CouplingFlowModel>(hyper, std::move(params));
    }
    throw ParseError("checkpoint: unknown model type '" + type + "'");
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("checkpoint: malformed document: ") + e.what());
  }
}

void save_checkpoint(const Model& model, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write checkpoint " + path.string());
  out << checkpoint_to_json(model).dump(1) << '\n';
}

std::unique_ptr<Model> load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open checkpoint " + path.string());
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError("checkpoint " + path.string() + ": " + e.what());
  }
  return checkpoint_from_json(doc);
}

}  // namespace fimscore
