#include <doctest.h>

#include "pignn/graph.hpp"
#include "support.hpp"

#include <map>
#include <set>

using namespace pignn;
namespace ts = testing_support;

namespace {

Graph path3() { return Graph(3, {{0, 1}, {1, 2}}); }
Graph complete(int n) { return generate(GraphKind::Complete, {.n = n}, 0); }

// Counts 3-cliques through each vertex by enumerating vertex triples.
std::vector<int> triangles_by_triples(const Graph& g) {
  const Eigen::MatrixXd a = adjacency(g);
  const int n = g.num_vertices();
  std::vector<int> t(n, 0);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k)
        if (i < j && j < k && a(i, j) && a(j, k) && a(i, k)) {
          ++t[i];
          ++t[j];
          ++t[k];
        }
  return t;
}

}  // namespace

TEST_CASE("graph construction normalizes and validates edges") {
  Graph g(4, {{2, 1}, {1, 2}, {0, 3}});
  CHECK(g.num_edges() == 2);
  CHECK(g.edges() == std::vector<Edge>{{0, 3}, {1, 2}});
  CHECK_THROWS_AS(Graph(3, {{0, 0}}), std::invalid_argument);
  CHECK_THROWS_AS(Graph(3, {{0, 3}}), std::invalid_argument);
  CHECK_THROWS_AS(Graph(0, {}), SizeError);
  CHECK_THROWS_AS(Graph(3, {}).set_node_labels({0, 1}), SizeError);
}

TEST_CASE("adjacency") {
  Eigen::MatrixXd p3(3, 3);
  p3 << 0, 1, 0, 1, 0, 1, 0, 1, 0;
  CHECK(adjacency(path3()) == p3);

  const Eigen::MatrixXd k3 = adjacency(complete(3));
  CHECK(k3 == Eigen::MatrixXd::Ones(3, 3) - Eigen::MatrixXd::Identity(3, 3));

  Eigen::MatrixXd e(2, 2);
  e << 0, 1, 1, 0;
  CHECK(adjacency(Graph(2, {{0, 1}})) == e);
}

TEST_CASE("pad_adjacency") {
  Eigen::MatrixXd e(2, 2);
  e << 0, 1, 1, 0;
  const Eigen::MatrixXd p = pad_adjacency(e, 3);
  CHECK(p.rows() == 3);
  CHECK(p.topLeftCorner(2, 2) == e);
  CHECK(p.row(2).isZero());
  CHECK(p.col(2).isZero());
  CHECK(pad_adjacency(e, 2) == e);
  CHECK(pad_adjacency(Eigen::MatrixXd::Zero(1, 1), 4) == Eigen::MatrixXd::Zero(4, 4));
  CHECK_THROWS_AS(pad_adjacency(e, 1), SizeError);
}

TEST_CASE("structural_features") {
  const Eigen::MatrixXd k3 = structural_features(complete(3));
  for (int v = 0; v < 3; ++v) {
    CHECK(k3(v, 0) == 2);
    CHECK(k3(v, 1) == 1);
  }
  Eigen::MatrixXd p3(3, 2);
  p3 << 1, 0, 2, 0, 1, 0;
  CHECK(structural_features(path3()) == p3);

  const Graph k4 = complete(4);
  const auto tri = triangles_by_triples(k4);
  const Eigen::MatrixXd f = structural_features(k4);
  for (int v = 0; v < 4; ++v) {
    CHECK(f(v, 0) == 3);
    CHECK(f(v, 1) == tri[v]);
    CHECK(tri[v] == 3);
  }
}

TEST_CASE("structural triangle counts agree with triple enumeration on random graphs") {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 50; ++trial) {
    const Graph g = ts::random_graph(rng, 1, 8);
    const auto tri = triangles_by_triples(g);
    const Eigen::MatrixXd f = structural_features(g);
    const auto deg = g.degrees();
    for (int v = 0; v < g.num_vertices(); ++v) {
      CHECK(f(v, 0) == deg[v]);
      CHECK(f(v, 1) == tri[v]);
    }
  }
}

TEST_CASE("build_vertex_matrix layout") {
  const Graph g = path3();
  CHECK(build_vertex_matrix(g) == structural_features(g));

  Graph labeled(2, {{0, 1}});
  labeled.set_node_labels({0, 1});
  const Eigen::MatrixXd q = build_vertex_matrix(labeled, FeatureSchema{2, 0});
  CHECK(q(1, 2) == 0);
  CHECK(q(1, 3) == 1);

  Graph k3 = complete(3);
  k3.set_node_labels({0, 0, 0});
  const Eigen::MatrixXd qk = build_vertex_matrix(k3, FeatureSchema{1, 0});
  for (int v = 0; v < 3; ++v) CHECK(qk.row(v) == Eigen::RowVector3d(2, 1, 1));

  Graph attrs(2, {{0, 1}});
  Eigen::MatrixXd x(2, 2);
  x << 0.5, -1, 2, 3;
  attrs.set_node_attrs(x);
  const Eigen::MatrixXd qa = build_vertex_matrix(attrs);
  CHECK(qa.cols() == 4);
  CHECK(qa.rightCols(2) == x);
}

TEST_CASE("feature schema rejects inconsistent datasets") {
  Graph a(2, {{0, 1}});
  a.set_node_labels({0, 1});
  Graph b(2, {{0, 1}});
  CHECK_THROWS_AS(FeatureSchema::infer(std::vector<Graph>{a, b}), SchemaError);

  Graph c(2, {{0, 1}});
  c.set_node_labels({0, 3});
  CHECK_THROWS_AS(build_vertex_matrix(c, FeatureSchema{2, 0}), SchemaError);
  CHECK_THROWS_AS(build_vertex_matrix(c, FeatureSchema{0, 0}), SchemaError);

  Graph d(2, {{0, 1}});
  d.set_node_attrs(Eigen::MatrixXd::Zero(2, 3));
  Graph e(2, {{0, 1}});
  e.set_node_attrs(Eigen::MatrixXd::Zero(2, 2));
  CHECK_THROWS_AS(FeatureSchema::infer(std::vector<Graph>{d, e}), SchemaError);
}

TEST_CASE("generators") {
  const Graph p = generate(GraphKind::Path, {.n = 4}, 0);
  CHECK(p.edges() == std::vector<Edge>{{0, 1}, {1, 2}, {2, 3}});

  const Graph s = generate(GraphKind::Star, {.n = 5}, 0);
  auto deg = s.degrees();
  std::sort(deg.begin(), deg.end());
  CHECK(deg == std::vector<int>{1, 1, 1, 1, 4});

  const GeneratorParams er{.n = 8, .prob = 0.5};
  CHECK(generate(GraphKind::ErdosRenyi, er, 7) == generate(GraphKind::ErdosRenyi, er, 7));

  CHECK(generate(GraphKind::Cycle, {.n = 5}, 0).num_edges() == 5);
  CHECK(generate(GraphKind::Complete, {.n = 5}, 0).num_edges() == 10);
  const Graph grid = generate(GraphKind::Grid, {.rows = 2, .cols = 3}, 0);
  CHECK(grid.num_vertices() == 6);
  CHECK(grid.num_edges() == 7);

  // p = 0 never connects, so the retry cap must trip.
  CHECK_THROWS(generate(GraphKind::ErdosRenyi, {.n = 5, .prob = 0.0, .max_retries = 3}, 1));
  CHECK_THROWS(generate(GraphKind::WattsStrogatz, {.n = 6, .neighbors = 3}, 1));
  CHECK(graph_kind_from_string(to_string(GraphKind::BarabasiAlbert)) == GraphKind::BarabasiAlbert);
  CHECK_THROWS(graph_kind_from_string("hypercube"));
}

TEST_CASE("random generators produce connected graphs deterministically") {
  for (GraphKind kind : {GraphKind::ErdosRenyi, GraphKind::BarabasiAlbert, GraphKind::WattsStrogatz}) {
    for (std::uint64_t seed = 0; seed < 30; ++seed) {
      GeneratorParams params{.n = 4 + static_cast<int>(seed % 6), .prob = 0.3, .attach = 2, .neighbors = 2};
      const Graph g = generate(kind, params, seed);
      CHECK(g.is_connected());
      CHECK(g.num_edges() >= 1);
      CHECK(g.num_vertices() == params.n);
      CHECK(g == generate(kind, params, seed));
    }
  }
}

TEST_CASE("standard synthetic corpus") {
  const Dataset ds = synthetic_corpus(CorpusRecipe::standard(), 0);
  CHECK(CorpusRecipe::standard().total() == 191);
  REQUIRE(ds.graphs.size() == 191);
  int lo = 100, hi = 0;
  double total = 0;
  for (const auto& g : ds.graphs) {
    CHECK(g.is_connected());
    CHECK(g.num_edges() >= 1);
    lo = std::min(lo, g.num_vertices());
    hi = std::max(hi, g.num_vertices());
    total += g.num_vertices();
    const auto* y = std::get_if<Eigen::VectorXd>(&g.target());
    REQUIRE(y);
    CHECK((*y)[0] == g.num_vertices());
  }
  CHECK(lo == 2);
  CHECK(hi == 9);
  MESSAGE("mean vertex count of the standard corpus: " << total / ds.graphs.size());
  CHECK_NOTHROW(ds.validate());
  CHECK(synthetic_corpus(CorpusRecipe::standard(), 0).graphs == ds.graphs);
  CHECK(synthetic_corpus(CorpusRecipe::standard(), 1).graphs != ds.graphs);
}

TEST_CASE("small synthetic corpus") {
  const Dataset ds = synthetic_corpus(CorpusRecipe::small(7), 3);
  CHECK(ds.graphs.size() >= 110);
  CHECK(ds.graphs.size() <= 130);
  for (const auto& g : ds.graphs) {
    CHECK(g.num_vertices() >= 2);
    CHECK(g.num_vertices() <= 7);
    CHECK(g.is_connected());
  }
  CHECK(ds.max_vertices() == 7);
}

TEST_CASE("permute_graph") {
  const Graph p3 = path3();
  CHECK(permute_graph(p3, {0, 1, 2}) == p3);
  const Graph r = permute_graph(p3, {2, 1, 0});
  CHECK(r.edges() == p3.edges());
  CHECK_THROWS_AS(permute_graph(p3, {0, 0, 1}), std::invalid_argument);
  CHECK_THROWS_AS(permute_graph(p3, {0, 1}), std::invalid_argument);

  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 50; ++trial) {
    Graph g = ts::random_graph(rng, 2, 8);
    std::vector<int> labels(g.num_vertices());
    for (int v = 0; v < g.num_vertices(); ++v) labels[v] = v % 3;
    g.set_node_labels(labels);
    g.set_node_attrs(ts::uniform_matrix(rng, g.num_vertices(), 2, -1, 1));
    const auto perm = ts::random_permutation(rng, g.num_vertices());
    const Graph h = permute_graph(g, perm);
    auto d1 = g.degrees(), d2 = h.degrees();
    std::sort(d1.begin(), d1.end());
    std::sort(d2.begin(), d2.end());
    CHECK(d1 == d2);

    const Eigen::MatrixXd pm = permutation_matrix(perm);
    CHECK(adjacency(h) == pm * adjacency(g) * pm.transpose());
    CHECK(structural_features(h) == pm * structural_features(g));
    CHECK(build_vertex_matrix(h) == pm * build_vertex_matrix(g));
    for (int v = 0; v < g.num_vertices(); ++v) CHECK((*h.node_labels())[perm[v]] == labels[v]);
  }
}

TEST_CASE("dataset validation") {
  Dataset ds;
  ds.task = TaskSpec::classification(2);
  ds.graphs.push_back(Graph(2, {{0, 1}}).set_target(1));
  CHECK_NOTHROW(ds.validate());
  ds.graphs.push_back(Graph(2, {{0, 1}}).set_target(2));
  CHECK_THROWS_AS(ds.validate(), SchemaError);
  ds.graphs.back().set_target(Eigen::VectorXd::Ones(1));
  CHECK_THROWS_AS(ds.validate(), SchemaError);

  Dataset reg;
  reg.task = TaskSpec::regression(2);
  reg.graphs.push_back(Graph(2, {{0, 1}}).set_target(Eigen::VectorXd::Ones(1)));
  CHECK_THROWS_AS(reg.validate(), SchemaError);
}
