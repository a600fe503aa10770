#include <catch2/catch_amalgamated.hpp>

#include <sstream>

#include "test_support.hpp"
#include "walkprop/dataset_io.hpp"
#include "walkprop/graph.hpp"

using namespace walkprop;

TEST_CASE("normalize_adjacency hand cases") {
  // 2-node path: degrees with self-loops are 2, so every entry is 1/2
  Graph path = Graph::from_edges(2, {{0, 1}}, Matrix::ones(2, 1));
  Matrix lam = normalize_adjacency(path, AdjacencyScheme::gcn_sym);
  CHECK(max_abs_diff(lam, Matrix{{0.5, 0.5}, {0.5, 0.5}}) < 1e-15);

  Graph single = Graph::from_edges(1, {}, Matrix::ones(1, 1));
  CHECK(normalize_adjacency(single, AdjacencyScheme::gcn_sym) == Matrix{{1.0}});

  Graph triangle = Graph::from_edges(3, {{0, 1}, {1, 2}, {0, 2}}, Matrix::ones(3, 1));
  CHECK(normalize_adjacency(triangle, AdjacencyScheme::gin_sum) == Matrix::ones(3, 3));
}

TEST_CASE("gcn_sym normalization is symmetric with entries in [0,1]") {
  Rng rng(7);
  for (int rep = 0; rep < 20; ++rep) {
    Graph g = wptest::random_graph(2 + rng.uniform_int(8), 1, 0.4, rng);
    Matrix lam = normalize_adjacency(g, AdjacencyScheme::gcn_sym);
    for (std::size_t i = 0; i < lam.rows(); ++i)
      for (std::size_t j = 0; j < lam.cols(); ++j) {
        CHECK(lam(i, j) == lam(j, i));
        CHECK(lam(i, j) >= 0.0);
        CHECK(lam(i, j) <= 1.0);
      }
  }
}

TEST_CASE("graph invariants from edge construction") {
  Graph g = Graph::from_edges(4, {{0, 1}, {1, 2}, {2, 2}}, Matrix::ones(4, 2));
  for (std::size_t i = 0; i < 4; ++i) CHECK(g.adjacency(i, i) == 0.0);  // self-loops dropped
  CHECK(g.adjacency(0, 1) == 1.0);
  CHECK(g.adjacency(1, 0) == 1.0);
  CHECK(g.num_edges() == 2);
  CHECK_THROWS_AS(Graph::from_edges(2, {{0, 5}}, Matrix::ones(2, 1)), ArgumentError);
  CHECK_THROWS_AS(Graph::from_edges(3, {}, Matrix::ones(2, 1)), ShapeError);
}

TEST_CASE("NodeSet sorts, dedups and complements") {
  NodeSet s(std::vector<std::size_t>{4, 1, 4, 2});
  CHECK(s.size() == 3);
  CHECK(s[0] == 1);
  CHECK(s.contains(4));
  CHECK_FALSE(s.contains(3));
  NodeSet c = s.complement(6);
  CHECK(c == NodeSet(std::vector<std::size_t>{0, 3, 5}));
  CHECK(s.united(c) == NodeSet::full(6));
}

TEST_CASE("NDJSON round-trips a dataset exactly") {
  Rng rng(13);
  Dataset ds;
  ds.name = "prop";
  ds.feature_dim = 3;
  for (int i = 0; i < 12; ++i) {
    Graph g = wptest::random_graph(1 + rng.uniform_int(9), 3, 0.5, rng);
    if (rng.uniform() < 0.7) g.label = static_cast<int>(rng.uniform_int(2));
    if (rng.uniform() < 0.5) g.motif_nodes = wptest::random_subset(g.num_nodes, 2, rng);
    ds.graphs.push_back(std::move(g));
  }
  std::stringstream buf;
  write_dataset_ndjson(ds, buf);
  Dataset back = read_dataset_ndjson(buf, "prop");
  CHECK(back.graphs == ds.graphs);
  CHECK(back.feature_dim == ds.feature_dim);
}

TEST_CASE("NDJSON parse errors carry the line") {
  std::stringstream buf("{\"num_nodes\": 1, \"edges\": [], \"features\": [[1.0]]}\nnot json\n");
  CHECK_THROWS_AS(read_dataset_ndjson(buf, "bad"), ParseError);
  std::stringstream buf2("not json\n");
  try {
    read_dataset_ndjson(buf2, "bad");
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(std::string(e.what()).find("bad:1") != std::string::npos);
  }
}

TEST_CASE("induced_subgraph zeroes features and cuts edges") {
  Graph g = Graph::from_edges(3, {{0, 1}, {1, 2}}, Matrix{{1.0}, {2.0}, {3.0}});
  Graph cut = induced_subgraph(g, NodeSet(std::vector<std::size_t>{0, 1}));
  CHECK(cut.features(2, 0) == 0.0);
  CHECK(cut.features(0, 0) == 1.0);
  CHECK(cut.adjacency(1, 2) == 0.0);
  CHECK(cut.adjacency(0, 1) == 1.0);
}
