#pragma once

#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "walkprop/graph.hpp"

namespace walkprop {

// NDJSON dataset format, one graph per line:
//   {"num_nodes": M, "edges": [[u,v],...] with u<v, "features": [[...],...],
//    "label": int|null, "motif": [n,...] (optional)}

inline nlohmann::json graph_to_json(const Graph& g) {
  nlohmann::json j;
  j["num_nodes"] = g.num_nodes;
  auto edges = nlohmann::json::array();
  for (const auto& [u, v] : g.edge_list()) edges.push_back({u, v});
  j["edges"] = std::move(edges);
  auto feats = nlohmann::json::array();
  for (std::size_t i = 0; i < g.num_nodes; ++i) {
    auto row = nlohmann::json::array();
    for (std::size_t k = 0; k < g.feature_dim(); ++k) row.push_back(g.features(i, k));
    feats.push_back(std::move(row));
  }
  j["features"] = std::move(feats);
  if (g.label)
    j["label"] = *g.label;
  else
    j["label"] = nullptr;
  if (g.motif_nodes) j["motif"] = g.motif_nodes->indices();
  return j;
}

inline Graph graph_from_json(const nlohmann::json& j) {
  if (!j.contains("num_nodes")) throw ParseError("graph record: missing \"num_nodes\"");
  if (!j.contains("edges")) throw ParseError("graph record: missing \"edges\"");
  if (!j.contains("features")) throw ParseError("graph record: missing \"features\"");
  const std::size_t m = j["num_nodes"].get<std::size_t>();
  const auto& feats = j["features"];
  if (feats.size() != m) throw ParseError("graph record: features rows != num_nodes");
  const std::size_t dim = m == 0 ? 0 : feats[0].size();
  Matrix features(m, dim);
  for (std::size_t i = 0; i < m; ++i) {
    if (feats[i].size() != dim) throw ParseError("graph record: ragged features");
    for (std::size_t k = 0; k < dim; ++k) features(i, k) = feats[i][k].get<double>();
  }
  std::vector<std::pair<std::size_t, std::size_t>> edges;
  for (const auto& e : j["edges"]) {
    if (e.size() != 2) throw ParseError("graph record: edge is not a pair");
    edges.emplace_back(e[0].get<std::size_t>(), e[1].get<std::size_t>());
  }
  Graph g = Graph::from_edges(m, edges, std::move(features));
  if (j.contains("label") && !j["label"].is_null()) g.label = j["label"].get<int>();
  if (j.contains("motif")) g.motif_nodes = NodeSet(j["motif"].get<std::vector<std::size_t>>());
  return g;
}

inline void write_dataset_ndjson(const Dataset& ds, std::ostream& out) {
  for (const Graph& g : ds.graphs) out << graph_to_json(g).dump() << "\n";
}

inline void save_dataset_ndjson(const Dataset& ds, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path + " for writing");
  write_dataset_ndjson(ds, out);
}

inline Dataset read_dataset_ndjson(std::istream& in, const std::string& name) {
  Dataset ds;
  ds.name = name;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(name + ":" + std::to_string(lineno) + ": " + e.what());
    }
    ds.graphs.push_back(graph_from_json(j));
  }
  if (!ds.graphs.empty()) {
    ds.feature_dim = ds.graphs[0].feature_dim();
    for (const Graph& g : ds.graphs)
      if (g.feature_dim() != ds.feature_dim)
        throw ParseError(name + ": graphs disagree on feature_dim");
  }
  return ds;
}

inline Dataset load_dataset_ndjson(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  return read_dataset_ndjson(in, path);
}

}  // namespace walkprop
