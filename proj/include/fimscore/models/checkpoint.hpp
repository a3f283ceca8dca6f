#pragma once

#include <filesystem>
#include <memory>

#include "fimscore/models/model.hpp"
#include "json.hpp"

namespace fimscore {

// Checkpoint document:
//   {"type": "coupling_flow" | "diag_gaussian", "dims": D,
//    "hyper": {"K": .., "H": .., "c": ..},          (empty for diag_gaussian)
//    "layers": [{"name": str, "shape": [..], "values": [..]}, ...]}
// Doubles are written in shortest round-trip form, so load(save(m))
// reproduces every parameter bit-for-bit.
nlohmann::json checkpoint_to_json(const Model& model);
std::unique_ptr<Model> checkpoint_from_json(const nlohmann::json& doc);

void save_checkpoint(const Model& model, const std::filesystem::path& path);
std::unique_ptr<Model> load_checkpoint(const std::filesystem::path& path);

}  // namespace fimscore
