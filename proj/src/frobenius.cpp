#include "pignn/frobenius.hpp"

#include <atomic>
#include <exception>
#include <numeric>
#include <random>
#include <thread>

namespace pignn {

namespace {

// Depth-first search over vertex bijections g1 -> g2 maximizing the number of
// common edges. Both graphs live on the same (padded) vertex set.
class OverlapSearch {
 public:
  OverlapSearch(const Graph& g1, const Graph& g2, int n, std::int64_t cap)
      : n_(n), cap_(cap), adj1_(n, std::vector<char>(n, 0)), adj2_(n, std::vector<char>(n, 0)),
        deg1_(n, 0), deg2_(n, 0) {
    for (const auto& [u, v] : g1.edges()) adj1_[u][v] = adj1_[v][u] = 1;
    for (const auto& [u, v] : g2.edges()) adj2_[u][v] = adj2_[v][u] = 1;
    const auto d1 = g1.degrees(), d2 = g2.degrees();
    std::copy(d1.begin(), d1.end(), deg1_.begin());
    std::copy(d2.begin(), d2.end(), deg2_.begin());
    perfect_ = std::min(g1.num_edges(), g2.num_edges());

    auto by_degree = [](const std::vector<int>& deg) {
      std::vector<int> order(deg.size());
      std::iota(order.begin(), order.end(), 0);
      std::stable_sort(order.begin(), order.end(),
                       [&](int a, int b) { return deg[a] > deg[b]; });
      return order;
    };
    order1_ = by_degree(deg1_);
    order2_ = by_degree(deg2_);
    image_.assign(n, -1);
    used_.assign(n, 0);
  }

  int run() {
    dfs(0, 0);
    return best_;
  }

 private:
  // Admissible bound on common edges still obtainable: every remaining common
  // edge touches an unassigned g1 vertex w, which can contribute at most
  // min(deg1(w), max degree among unused g2 vertices).
  int remaining_bound(int depth) const {
    int max_deg2 = 0;
    for (int x = 0; x < n_; ++x)
      if (!used_[x]) max_deg2 = std::max(max_deg2, deg2_[x]);
    int bound = 0;
    for (int k = depth; k < n_; ++k) bound += std::min(deg1_[order1_[k]], max_deg2);
    return bound;
  }

  void dfs(int depth, int overlap) {
    if (best_ == perfect_) return;
    if (++expanded_ > cap_) {
      throw OracleInfeasible("exact oracle infeasible: node expansion cap " +
                             std::to_string(cap_) + " exceeded");
    }
    if (depth == n_) {
      best_ = std::max(best_, overlap);
      return;
    }
    if (overlap + remaining_bound(depth) <= best_) return;
    const int u = order1_[depth];
    for (int x : order2_) {
      if (used_[x]) continue;
      int gain = 0;
      for (int k = 0; k < depth; ++k) {
        const int w = order1_[k];
        if (adj1_[u][w] && adj2_[x][image_[w]]) ++gain;
      }
      image_[u] = x;
      used_[x] = 1;
      dfs(depth + 1, overlap + gain);
      used_[x] = 0;
      image_[u] = -1;
      if (best_ == perfect_) return;
    }
  }

  int n_;
  std::int64_t cap_;
  std::vector<std::vector<char>> adj1_, adj2_;
  std::vector<int> deg1_, deg2_, order1_, order2_, image_;
  std::vector<char> used_;
  int perfect_ = 0;
  int best_ = -1;
  std::int64_t expanded_ = 0;
};

Eigen::MatrixXd permuted_padded(const Graph& g, const std::vector<int>& perm) {
  const int n = static_cast<int>(perm.size());
  Eigen::MatrixXd p = permutation_matrix(perm);
  Eigen::MatrixXd a = pad_adjacency(adjacency(g), n);
  return p * a * p.transpose();
}

std::vector<int> random_permutation(int n, std::mt19937_64& rng) {
  std::vector<int> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), rng);
  return perm;
}

DistanceMatrix with_ids(const Dataset& ds, Eigen::MatrixXd values) {
  DistanceMatrix dm;
  dm.values = std::move(values);
  dm.ids.reserve(ds.graphs.size());
  for (std::size_t i = 0; i < ds.graphs.size(); ++i) dm.ids.push_back(std::to_string(i));
  return dm;
}

}  // namespace

int max_edge_overlap(const Graph& g1, const Graph& g2, const OracleBudget& budget) {
  const int n = std::max(g1.num_vertices(), g2.num_vertices());
  if (n > budget.max_vertices_exact) {
    throw OracleInfeasible("exact oracle infeasible: " + std::to_string(n) +
                           " vertices exceeds budget of " +
                           std::to_string(budget.max_vertices_exact));
  }
  return OverlapSearch(g1, g2, n, budget.node_expansion_cap).run();
}

double exact_distance(const Graph& g1, const Graph& g2, const OracleBudget& budget) {
  const int overlap = max_edge_overlap(g1, g2, budget);
  const int sq = 2 * g1.num_edges() + 2 * g2.num_edges() - 4 * overlap;
  return std::sqrt(static_cast<double>(sq));
}

DistanceMatrix distance_matrix(const Dataset& ds, const OracleBudget& budget, int threads) {
  const int count = static_cast<int>(ds.graphs.size());
  std::vector<std::pair<int, int>> pairs;
  for (int i = 0; i < count; ++i)
    for (int j = i; j < count; ++j) pairs.emplace_back(i, j);

  Eigen::MatrixXd values = Eigen::MatrixXd::Zero(count, count);
  std::vector<std::exception_ptr> errors(pairs.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t k = next++; k < pairs.size(); k = next++) {
      const auto [i, j] = pairs[k];
      try {
        const double d = i == j ? 0.0 : exact_distance(ds.graphs[i], ds.graphs[j], budget);
        values(i, j) = d;
        values(j, i) = d;
      } catch (...) {
        errors[k] = std::current_exception();
      }
    }
  };
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  for (std::size_t k = 0; k < pairs.size(); ++k) {
    if (!errors[k]) continue;
    try {
      std::rethrow_exception(errors[k]);
    } catch (const OracleInfeasible& e) {
      throw OracleInfeasible("pair (" + std::to_string(pairs[k].first) + "," +
                             std::to_string(pairs[k].second) + "): " + e.what());
    }
  }
  return with_ids(ds, std::move(values));
}

double permuted_distance(const Graph& g1, const std::vector<int>& perm1, const Graph& g2,
                         const std::vector<int>& perm2) {
  if (perm1.size() != perm2.size()) throw SizeError("permuted_distance: permutation sizes differ");
  return (permuted_padded(g1, perm1) - permuted_padded(g2, perm2)).norm();
}

double random_perm_distance(const Graph& g1, const Graph& g2, std::uint64_t seed) {
  const int n = std::max(g1.num_vertices(), g2.num_vertices());
  std::mt19937_64 rng(seed);
  const auto p1 = random_permutation(n, rng);
  const auto p2 = random_permutation(n, rng);
  return permuted_distance(g1, p1, g2, p2);
}

DistanceMatrix random_baseline_matrix(const Dataset& ds, std::uint64_t seed) {
  const int n = ds.max_vertices();
  const int count = static_cast<int>(ds.graphs.size());
  std::mt19937_64 rng(seed);
  std::vector<Eigen::MatrixXd> aligned;
  for (const auto& g : ds.graphs) aligned.push_back(permuted_padded(g, random_permutation(n, rng)));
  Eigen::MatrixXd values = Eigen::MatrixXd::Zero(count, count);
  for (int i = 0; i < count; ++i)
    for (int j = i + 1; j < count; ++j) values(i, j) = values(j, i) = (aligned[i] - aligned[j]).norm();
  return with_ids(ds, std::move(values));
}

double uniform_soft_distance(const Graph& g1, const Graph& g2, int n_max) {
  const Eigen::MatrixXd d = Eigen::MatrixXd::Constant(n_max, n_max, 1.0 / n_max);
  const Eigen::MatrixXd a1 = pad_adjacency(adjacency(g1), n_max);
  const Eigen::MatrixXd a2 = pad_adjacency(adjacency(g2), n_max);
  return (d * a1 * d.transpose() - d * a2 * d.transpose()).norm();
}

DistanceMatrix uniform_baseline_matrix(const Dataset& ds) {
  const int n = ds.max_vertices();
  const int count = static_cast<int>(ds.graphs.size());
  Eigen::MatrixXd values = Eigen::MatrixXd::Zero(count, count);
  for (int i = 0; i < count; ++i)
    for (int j = i + 1; j < count; ++j)
      values(i, j) = values(j, i) = uniform_soft_distance(ds.graphs[i], ds.graphs[j], n);
  return with_ids(ds, std::move(values));
}

Eigen::MatrixXd path_embedding_matrix(int n) {
  if (n < 1) throw std::invalid_argument("path_embedding_matrix: n must be >= 1");
  const int side = n + 1;
  Eigen::MatrixXd x = Eigen::MatrixXd::Zero(n, side * side);
  for (int i = 0; i < n; ++i) {
    // Path on i + 2 vertices: vertex k sits at distance k from the terminal 0.
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(side, side);
    for (int k = 0; k + 1 < i + 2; ++k) a(k, k + 1) = a(k + 1, k) = 1.0;
    // vec stacks columns; Eigen's default storage is column-major.
    x.row(i) = Eigen::Map<const Eigen::RowVectorXd>(a.data(), side * side);
  }
  return x;
}

Eigen::MatrixXd counterexample_squared_distances() {
  Eigen::MatrixXd d2(5, 5);
  d2 << 0, 2, 6, 4, 4,
        2, 0, 4, 2, 6,
        6, 4, 0, 6, 2,
        4, 2, 6, 0, 4,
        4, 6, 2, 4, 0;
  return d2;
}

}  // namespace pignn
