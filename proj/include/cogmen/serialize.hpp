#pragma once

#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "cogmen/tensor.hpp"

namespace cogmen {

using NamedTensors = std::vector<std::pair<std::string, Tensor*>>;
using ConstNamedTensors = std::vector<std::pair<std::string, const Tensor*>>;

inline constexpr const char* kParamsMagic = "cogmen.params";
inline constexpr int kParamsVersion = 1;

/// Parameter map format:
///   {"magic": "cogmen.params", "version": 1,
///    "tensors": {"<name>": {"shape": [rows, cols], "data": [row-major f64...]}}}
/// Doubles are written with shortest round-trip formatting, so a reload is
/// bit-exact.
nlohmann::json tensors_to_json(const ConstNamedTensors& tensors);

/// Fills every named tensor from `doc`. Names and shapes must match exactly;
/// extra or missing entries are an error.
void tensors_from_json(const nlohmann::json& doc, const NamedTensors& tensors);

nlohmann::json matrix_to_json(const Matrix& m);
Matrix matrix_from_json(const nlohmann::json& doc);

/// 64-bit FNV-1a, used for corpus and config fingerprints.
std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t seed = 0xcbf29ce484222325ULL);
std::string hex64(std::uint64_t value);

}  // namespace cogmen
