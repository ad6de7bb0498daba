#pragma once

// Independent reference implementations used as test oracles. Everything here
// is deliberately brute force.

#include <Eigen/Dense>

#include "pignn/graph.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <vector>

namespace testing_support {

using pignn::Edge;
using pignn::Graph;

// Uniformly random simple graph (possibly disconnected, possibly edgeless).
inline Graph random_graph(std::mt19937_64& rng, int n, double p) {
  std::bernoulli_distribution coin(p);
  std::vector<Edge> edges;
  for (int u = 0; u < n; ++u)
    for (int v = u + 1; v < n; ++v)
      if (coin(rng)) edges.emplace_back(u, v);
  return Graph(n, edges);
}

inline Graph random_graph(std::mt19937_64& rng, int n_min, int n_max) {
  std::uniform_int_distribution<int> nd(n_min, n_max);
  std::uniform_real_distribution<double> pd(0.2, 0.8);
  const int n = nd(rng);
  return random_graph(rng, n, pd(rng));
}

inline Graph random_connected_graph(std::mt19937_64& rng, int n_min, int n_max) {
  for (;;) {
    Graph g = random_graph(rng, n_min, n_max);
    if (g.num_edges() > 0 && g.is_connected()) return g;
  }
}

inline std::vector<int> random_permutation(std::mt19937_64& rng, int n) {
  std::vector<int> p(n);
  std::iota(p.begin(), p.end(), 0);
  std::shuffle(p.begin(), p.end(), rng);
  return p;
}

inline Eigen::MatrixXd dense_adjacency(const Graph& g, int size) {
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(size, size);
  for (const auto& [u, v] : g.edges()) a(u, v) = a(v, u) = 1;
  return a;
}

// min over all n! relabelings of ||A1 - P A2 P^T||_F after padding.
inline double naive_distance(const Graph& g1, const Graph& g2) {
  const int n = std::max(g1.num_vertices(), g2.num_vertices());
  const Eigen::MatrixXd a1 = dense_adjacency(g1, n);
  const Eigen::MatrixXd a2 = dense_adjacency(g2, n);
  std::vector<int> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  double best = INFINITY;
  do {
    double sq = 0;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        const double d = a1(i, j) - a2(perm[i], perm[j]);
        sq += d * d;
      }
    best = std::min(best, sq);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return std::sqrt(best);
}

// True when some bijection maps the padded edge sets onto each other.
inline bool brute_force_isomorphic(const Graph& g1, const Graph& g2) {
  const int n = std::max(g1.num_vertices(), g2.num_vertices());
  if (g1.num_edges() != g2.num_edges()) return false;
  const Eigen::MatrixXd a1 = dense_adjacency(g1, n);
  const Eigen::MatrixXd a2 = dense_adjacency(g2, n);
  std::vector<int> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  do {
    bool same = true;
    for (int i = 0; i < n && same; ++i)
      for (int j = 0; j < n && same; ++j) same = a1(i, j) == a2(perm[i], perm[j]);
    if (same) return true;
  } while (std::next_permutation(perm.begin(), perm.end()));
  return false;
}

// Square assignment maximizing sum_i S(i, perm[i]) by full enumeration.
inline std::vector<int> exhaustive_assignment(const Eigen::MatrixXd& s) {
  const int n = static_cast<int>(s.rows());
  std::vector<int> perm(n), best;
  std::iota(perm.begin(), perm.end(), 0);
  double best_score = -INFINITY;
  do {
    double total = 0;
    for (int i = 0; i < n; ++i) total += s(i, perm[i]);
    if (total > best_score) {
      best_score = total;
      best = perm;
    }
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

inline Eigen::MatrixXd uniform_matrix(std::mt19937_64& rng, int rows, int cols, double lo, double hi) {
  std::uniform_real_distribution<double> d(lo, hi);
  Eigen::MatrixXd m(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) m(i, j) = d(rng);
  return m;
}

}  // namespace testing_support
