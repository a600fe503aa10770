#pragma once

#include <algorithm>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "walkprop/graph.hpp"

namespace walkprop {

// Reader for the TUDataset plain-text layout: per-dataset files
//   {name}_A.txt                comma-separated "u, v" edge pairs, 1-indexed,
//                               each undirected edge listed in both directions
//   {name}_graph_indicator.txt  graph id of node i on line i
//   {name}_graph_labels.txt     label of graph g on line g
//   {name}_node_labels.txt      optional; node label of node i on line i
//
// Node labels become one-hot features (feature_dim = number of distinct
// labels); without node labels every node gets the constant feature 1.
// Graph labels are remapped to 0,1,... in ascending order of raw value.

namespace detail {

inline std::vector<std::string> read_lines(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    while (!line.empty() && (line.back() == '\r' || line.back() == '\n')) line.pop_back();
    lines.push_back(line);
  }
  while (!lines.empty() && lines.back().empty()) lines.pop_back();
  return lines;
}

inline long parse_long(const std::string& s, const std::string& file, std::size_t lineno) {
  std::size_t pos = 0;
  long v = 0;
  try {
    v = std::stol(s, &pos);
  } catch (const std::exception&) {
    throw ParseError(file + ":" + std::to_string(lineno) + ": expected integer, got \"" + s + "\"");
  }
  for (; pos < s.size(); ++pos)
    if (!std::isspace(static_cast<unsigned char>(s[pos])))
      throw ParseError(file + ":" + std::to_string(lineno) + ": trailing characters in \"" + s + "\"");
  return v;
}

}  // namespace detail

inline Dataset ingest_tu(const std::string& directory, const std::string& name) {
  const std::string prefix = directory + "/" + name;
  const std::string a_file = prefix + "_A.txt";
  const std::string ind_file = prefix + "_graph_indicator.txt";
  const std::string glab_file = prefix + "_graph_labels.txt";
  const std::string nlab_file = prefix + "_node_labels.txt";

  auto edges_raw = detail::read_lines(a_file);
  auto indicator_raw = detail::read_lines(ind_file);
  auto glabels_raw = detail::read_lines(glab_file);

  const std::size_t total_nodes = indicator_raw.size();
  const std::size_t n_graphs = glabels_raw.size();

  // node -> graph, plus a local index within its graph
  std::vector<std::size_t> node_graph(total_nodes);
  std::vector<std::size_t> node_local(total_nodes);
  std::vector<std::size_t> graph_size(n_graphs, 0);
  for (std::size_t i = 0; i < total_nodes; ++i) {
    const long gid = detail::parse_long(indicator_raw[i], ind_file, i + 1);
    if (gid < 1 || static_cast<std::size_t>(gid) > n_graphs)
      throw ParseError(ind_file + ":" + std::to_string(i + 1) + ": graph id " +
                       std::to_string(gid) + " out of range");
    node_graph[i] = static_cast<std::size_t>(gid) - 1;
    node_local[i] = graph_size[node_graph[i]]++;
  }

  // graph labels remapped by ascending raw value
  std::vector<long> glabels(n_graphs);
  std::set<long> distinct_glabels;
  for (std::size_t g = 0; g < n_graphs; ++g) {
    glabels[g] = detail::parse_long(glabels_raw[g], glab_file, g + 1);
    distinct_glabels.insert(glabels[g]);
  }
  std::map<long, int> glabel_map;
  int next_label = 0;
  for (long v : distinct_glabels) glabel_map[v] = next_label++;

  // optional node labels -> one-hot features
  std::size_t feature_dim = 1;
  std::vector<std::size_t> node_feature_index(total_nodes, 0);
  bool has_node_labels = false;
  if (std::ifstream probe(nlab_file); probe) {
    has_node_labels = true;
    auto nlabels_raw = detail::read_lines(nlab_file);
    if (nlabels_raw.size() != total_nodes)
      throw ParseError(nlab_file + ": expected " + std::to_string(total_nodes) + " lines, got " +
                       std::to_string(nlabels_raw.size()));
    std::vector<long> nlabels(total_nodes);
    std::set<long> distinct;
    for (std::size_t i = 0; i < total_nodes; ++i) {
      nlabels[i] = detail::parse_long(nlabels_raw[i], nlab_file, i + 1);
      distinct.insert(nlabels[i]);
    }
    std::map<long, std::size_t> nlabel_map;
    std::size_t next = 0;
    for (long v : distinct) nlabel_map[v] = next++;
    feature_dim = distinct.size();
    for (std::size_t i = 0; i < total_nodes; ++i) node_feature_index[i] = nlabel_map[nlabels[i]];
  }

  Dataset ds;
  ds.name = name;
  ds.feature_dim = feature_dim;
  ds.graphs.resize(n_graphs);
  for (std::size_t g = 0; g < n_graphs; ++g) {
    Graph& gr = ds.graphs[g];
    gr.num_nodes = graph_size[g];
    gr.adjacency = Matrix(graph_size[g], graph_size[g]);
    gr.features = Matrix(graph_size[g], feature_dim);
    gr.label = glabel_map[glabels[g]];
  }
  for (std::size_t i = 0; i < total_nodes; ++i) {
    Graph& gr = ds.graphs[node_graph[i]];
    if (has_node_labels)
      gr.features(node_local[i], node_feature_index[i]) = 1.0;
    else
      gr.features(node_local[i], 0) = 1.0;
  }

  // directed pairs; every (u,v) must have its (v,u) companion
  std::set<std::pair<std::size_t, std::size_t>> seen;
  std::vector<std::size_t> first_line_of;
  std::vector<std::pair<std::size_t, std::size_t>> directed;
  for (std::size_t ln = 0; ln < edges_raw.size(); ++ln) {
    const std::string& line = edges_raw[ln];
    if (line.empty()) continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos)
      throw ParseError(a_file + ":" + std::to_string(ln + 1) + ": expected \"u, v\"");
    const long u = detail::parse_long(line.substr(0, comma), a_file, ln + 1);
    const long v = detail::parse_long(line.substr(comma + 1), a_file, ln + 1);
    if (u < 1 || static_cast<std::size_t>(u) > total_nodes || v < 1 ||
        static_cast<std::size_t>(v) > total_nodes)
      throw ParseError(a_file + ":" + std::to_string(ln + 1) + ": edge references unknown node");
    const std::size_t ui = static_cast<std::size_t>(u) - 1;
    const std::size_t vi = static_cast<std::size_t>(v) - 1;
    if (node_graph[ui] != node_graph[vi])
      throw ParseError(a_file + ":" + std::to_string(ln + 1) + ": edge crosses graph boundary");
    directed.emplace_back(ui, vi);
    first_line_of.push_back(ln + 1);
    seen.insert({ui, vi});
    ds.graphs[node_graph[ui]].adjacency(node_local[ui], node_local[vi]) = 1.0;
  }
  for (std::size_t k = 0; k < directed.size(); ++k) {
    const auto [u, v] = directed[k];
    if (!seen.count({v, u}))
      throw ParseError(a_file + ":" + std::to_string(first_line_of[k]) +
                       ": edge list not symmetric (missing reverse of " + std::to_string(u + 1) +
                       ", " + std::to_string(v + 1) + ")");
  }
  for (Graph& gr : ds.graphs)
    for (std::size_t i = 0; i < gr.num_nodes; ++i) gr.adjacency(i, i) = 0.0;

  return ds;
}

}  // namespace walkprop
