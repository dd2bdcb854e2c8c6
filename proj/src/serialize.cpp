#include "cogmen/serialize.hpp"

#include <cstdio>
#include <set>
#include <stdexcept>

namespace cogmen {

nlohmann::json matrix_to_json(const Matrix& m) {
  nlohmann::json doc;
  doc["shape"] = {m.rows(), m.cols()};
  doc["data"] = std::vector<double>(m.data(), m.data() + m.size());
  return doc;
}

Matrix matrix_from_json(const nlohmann::json& doc) {
  const auto shape = doc.at("shape").get<std::vector<Index>>();
  if (shape.size() != 2 || shape[0] < 0 || shape[1] < 0)
    throw std::runtime_error("tensor shape must be [rows, cols]");
  const auto data = doc.at("data").get<std::vector<double>>();
  if (static_cast<Index>(data.size()) != shape[0] * shape[1])
    throw std::runtime_error("tensor data length " + std::to_string(data.size()) +
                             " does not match shape " + shape_string(shape[0], shape[1]));
  Matrix m(shape[0], shape[1]);
  std::copy(data.begin(), data.end(), m.data());
  return m;
}

nlohmann::json tensors_to_json(const ConstNamedTensors& tensors) {
  nlohmann::json doc;
  doc["magic"] = kParamsMagic;
  doc["version"] = kParamsVersion;
  nlohmann::json& body = doc["tensors"] = nlohmann::json::object();
  for (const auto& [name, t] : tensors) {
    if (body.contains(name)) throw std::logic_error("duplicate tensor name " + name);
    body[name] = matrix_to_json(t->data);
  }
  return doc;
}

void tensors_from_json(const nlohmann::json& doc, const NamedTensors& tensors) {
  if (doc.value("magic", std::string()) != kParamsMagic)
    throw std::runtime_error("not a parameter file (bad magic)");
  const int version = doc.value("version", -1);
  if (version != kParamsVersion)
    throw std::runtime_error("unsupported parameter format version " + std::to_string(version));
  const auto& body = doc.at("tensors");
  std::set<std::string> seen;
  for (const auto& [name, t] : tensors) {
    if (!body.contains(name)) throw std::runtime_error("parameter file lacks tensor " + name);
    Matrix m = matrix_from_json(body.at(name));
    if (m.rows() != t->rows() || m.cols() != t->cols())
      throw DimensionError("tensor " + name + " has shape " + shape_string(m) + ", expected " +
                           shape_string(t->data));
    t->data = std::move(m);
    seen.insert(name);
  }
  for (const auto& [name, value] : body.items())
    if (!seen.count(name)) throw std::runtime_error("unexpected tensor " + name + " in parameter file");
}

std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t seed) {
  std::uint64_t h = seed;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hex64(std::uint64_t value) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(value));
  return buf;
}

}  // namespace cogmen
