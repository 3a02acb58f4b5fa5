#pragma once

#include <string>

#include "json.hpp"
#include "parisi/model.hpp"
#include "parisi/parisi.hpp"

namespace parisi {

inline constexpr const char* kModelSchema = "parisi.model/1";
inline constexpr const char* kResultSchema = "parisi.result/1";
inline constexpr const char* kVersion = "0.1.0";

// potts(D), sk, bp_sk(alpha), ising_diag(D,c1,c2,...), counterexample.
ModelInstance preset_model(const std::string& text);

// Model documents use 1-based entry indices. Any problem is a ConfigError.
ModelInstance model_from_json(const nlohmann::json& doc);
nlohmann::json model_to_json(const ModelInstance& model);  // canonical form
ModelInstance parse_model_text(const std::string& text);
// A readable file is parsed as a model document; otherwise the argument is
// tried as a preset name.
ModelInstance load_model(const std::string& file_or_preset);

// 64-bit FNV-1a of the canonical document, as 16 hex digits.
std::string model_hash(const ModelInstance& model);

// {"cone": "scalar"|"pair"|"psd", "grid": [...], "values": [...]}
nlohmann::json path_to_json(const AnyPath& path);
AnyPath path_from_json(const nlohmann::json& doc);
AnyPath load_path(const std::string& file);

// One row per level: u_start, u_end, then the value components
// (p | lambda1, lambda2 | q11, q22, q12).
std::string path_to_csv(const AnyPath& path);

}  // namespace parisi
