#pragma once

// JSON model description files.
//
//   {
//     "name": "bernoulli-delta",
//     "atoms": [
//       {"ell": 1.0, "weight": 0.5, "kind": "connecting",
//        "params": {"theta": 0.0, "B": [[1, 0], [1, 1]]}},
//       {"ell": 1.0, "weight": 0.25, "kind": "trivial", "params": {"theta": 0.0}},
//       {"ell": 2.0, "weight": 0.25, "kind": "separating",
//        "params": {"x": 1, "y": 0, "w": 1, "z": 0}}
//     ]
//   }

#include <filesystem>
#include <string>

#include <nlohmann/json.hpp>

#include "pointlab/model.hpp"

namespace pointlab {

nlohmann::json to_json(const DisorderMeasure& measure);
// Throws DomainError naming the offending field.
DisorderMeasure measure_from_json(const nlohmann::json& j);

DisorderMeasure load_measure(const std::filesystem::path& path);
void save_measure(const DisorderMeasure& measure, const std::filesystem::path& path);

}  // namespace pointlab
