#pragma once

#include <fstream>
#include <string>

#include <json.hpp>

#include "walkprop/model.hpp"

namespace walkprop {

// JSON model schema:
// {version, adjacency_scheme, blocks: [{kind, sublayers: [{w, b|null, act}]}],
//  readout: {pool: "mean", head: [{w, b|null, act}]}}

namespace detail {

inline nlohmann::json matrix_to_json(const Matrix& m) {
  auto rows = nlohmann::json::array();
  for (std::size_t i = 0; i < m.rows(); ++i) {
    auto row = nlohmann::json::array();
    for (std::size_t j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

inline Matrix matrix_from_json(const nlohmann::json& j, const std::string& field) {
  if (!j.is_array() || j.empty() || !j[0].is_array())
    throw ParseError("model: field \"" + field + "\" is not a matrix");
  Matrix m(j.size(), j[0].size());
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (j[i].size() != m.cols()) throw ParseError("model: ragged matrix in \"" + field + "\"");
    for (std::size_t k = 0; k < m.cols(); ++k) m(i, k) = j[i][k].get<double>();
  }
  return m;
}

inline nlohmann::json sublayer_to_json(const Sublayer& s) {
  nlohmann::json j;
  j["w"] = matrix_to_json(s.weight);
  if (s.bias) {
    auto b = nlohmann::json::array();
    for (std::size_t k = 0; k < s.bias->cols(); ++k) b.push_back((*s.bias)(0, k));
    j["b"] = std::move(b);
  } else {
    j["b"] = nullptr;
  }
  j["act"] = to_string(s.act);
  return j;
}

inline Sublayer sublayer_from_json(const nlohmann::json& j) {
  if (!j.contains("w")) throw ParseError("model: sublayer missing field \"w\"");
  if (!j.contains("act")) throw ParseError("model: sublayer missing field \"act\"");
  Sublayer s;
  s.weight = matrix_from_json(j["w"], "w");
  if (j.contains("b") && !j["b"].is_null()) {
    auto vals = j["b"].get<std::vector<double>>();
    Matrix b(1, vals.size());
    for (std::size_t k = 0; k < vals.size(); ++k) b(0, k) = vals[k];
    s.bias = std::move(b);
  }
  const std::string act = j["act"].get<std::string>();
  if (act == "relu")
    s.act = Activation::relu;
  else if (act == "identity")
    s.act = Activation::identity;
  else
    throw ParseError("model: unknown activation \"" + act + "\" in field \"act\"");
  return s;
}

}  // namespace detail

inline nlohmann::json model_to_json(const GnnModel& m) {
  nlohmann::json j;
  j["version"] = 1;
  j["adjacency_scheme"] = to_string(m.adjacency_scheme);
  auto blocks = nlohmann::json::array();
  for (const auto& b : m.blocks) {
    nlohmann::json jb;
    jb["kind"] = to_string(b.kind);
    auto subs = nlohmann::json::array();
    for (const auto& s : b.sublayers) subs.push_back(detail::sublayer_to_json(s));
    jb["sublayers"] = std::move(subs);
    blocks.push_back(std::move(jb));
  }
  j["blocks"] = std::move(blocks);
  nlohmann::json jr;
  jr["pool"] = "mean";
  auto head = nlohmann::json::array();
  for (const auto& s : m.readout.layers) head.push_back(detail::sublayer_to_json(s));
  jr["head"] = std::move(head);
  j["readout"] = std::move(jr);
  return j;
}

inline std::string save_model(const GnnModel& m) { return model_to_json(m).dump(); }

inline GnnModel model_from_json(const nlohmann::json& j) {
  for (const char* field : {"version", "adjacency_scheme", "blocks", "readout"})
    if (!j.contains(field)) throw ParseError(std::string("model: missing field \"") + field + "\"");
  GnnModel m;
  m.adjacency_scheme = adjacency_scheme_from_string(j["adjacency_scheme"].get<std::string>());
  for (const auto& jb : j["blocks"]) {
    if (!jb.contains("kind")) throw ParseError("model: block missing field \"kind\"");
    InteractionBlock b;
    const std::string kind = jb["kind"].get<std::string>();
    if (kind == "gcn")
      b.kind = BlockKind::gcn;
    else if (kind == "gin")
      b.kind = BlockKind::gin;
    else
      throw ParseError("model: unknown block kind \"" + kind + "\" in field \"kind\"");
    if (!jb.contains("sublayers")) throw ParseError("model: block missing field \"sublayers\"");
    for (const auto& js : jb["sublayers"]) b.sublayers.push_back(detail::sublayer_from_json(js));
    m.blocks.push_back(std::move(b));
  }
  const auto& jr = j["readout"];
  if (!jr.contains("pool") || jr["pool"].get<std::string>() != "mean")
    throw ParseError("model: readout field \"pool\" must be \"mean\"");
  if (!jr.contains("head")) throw ParseError("model: readout missing field \"head\"");
  for (const auto& js : jr["head"]) m.readout.layers.push_back(detail::sublayer_from_json(js));
  m.validate();
  return m;
}

inline GnnModel load_model(const std::string& bytes) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(bytes);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("model: invalid JSON: ") + e.what());
  }
  return model_from_json(j);
}

inline void save_model_file(const GnnModel& m, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path + " for writing");
  out << save_model(m) << "\n";
}

inline GnnModel load_model_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return load_model(bytes);
}

}  // namespace walkprop
