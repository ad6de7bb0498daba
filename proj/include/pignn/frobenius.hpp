#pragma once

#include <Eigen/Dense>

#include "pignn/errors.hpp"
#include "pignn/graph.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

namespace pignn {

struct OracleBudget {
  int max_vertices_exact = 10;
  std::int64_t node_expansion_cap = 200'000'000;
};

// Symmetric N x N matrix of graph distances, optionally tagged with graph ids.
struct DistanceMatrix {
  Eigen::MatrixXd values;
  std::vector<std::string> ids;

  Eigen::Index size() const { return values.rows(); }
};

// min over permutations P of ||A1 - P A2 P^T||_F, after zero-padding the
// smaller graph. Exact; throws OracleInfeasible rather than approximating.
double exact_distance(const Graph& g1, const Graph& g2, const OracleBudget& budget = {});

// Largest number of common edges over all vertex bijections (padded). The
// squared distance is 2 m1 + 2 m2 - 4 * overlap.
int max_edge_overlap(const Graph& g1, const Graph& g2, const OracleBudget& budget = {});

// Pairwise exact distances including self-pairs. threads > 1 evaluates pairs
// concurrently; the result does not depend on the schedule.
DistanceMatrix distance_matrix(const Dataset& ds, const OracleBudget& budget = {},
                               int threads = 1);

// ||P1 A1 P1^T - P2 A2 P2^T||_F for explicit permutations of the padded size.
double permuted_distance(const Graph& g1, const std::vector<int>& perm1, const Graph& g2,
                         const std::vector<int>& perm2);

// Independent uniformly random permutations on max(n1, n2) vertices.
double random_perm_distance(const Graph& g1, const Graph& g2, std::uint64_t seed);

// One random permutation per graph on n_max = dataset max vertices.
DistanceMatrix random_baseline_matrix(const Dataset& ds, std::uint64_t seed);

// ||D A1 D^T - D A2 D^T||_F with D = ones / n_max, both graphs padded to n_max.
double uniform_soft_distance(const Graph& g1, const Graph& g2, int n_max);

DistanceMatrix uniform_baseline_matrix(const Dataset& ds);

// Row i is vec of the (n+1)x(n+1) padded adjacency of the path on i + 2
// vertices, vertices ordered by distance from a terminal vertex.
Eigen::MatrixXd path_embedding_matrix(int n);

// The squared-distance matrix of the five-graph counterexample showing the
// graph metric is not Euclidean.
Eigen::MatrixXd counterexample_squared_distances();

// ---------------------------------------------------------------------------
// Dense linear algebra helpers, templated on scalar.

// K = -1/2 J D2 J with the centering matrix J = I - 11^T / N.
template <typename Derived>
Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, Eigen::Dynamic>
double_center(const Eigen::MatrixBase<Derived>& d2) {
  using Scalar = typename Derived::Scalar;
  using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  if (d2.rows() != d2.cols()) {
    throw SizeError("double_center: matrix is " + std::to_string(d2.rows()) + "x" +
                    std::to_string(d2.cols()) + ", expected square");
  }
  const Eigen::Index n = d2.rows();
  if (n == 0) return Mat(0, 0);
  const Mat j = Mat::Identity(n, n) - Mat::Constant(n, n, Scalar(1) / Scalar(n));
  Mat k = Scalar(-0.5) * (j * d2 * j);
  // Symmetrize away rounding.
  return Scalar(0.5) * (k + k.transpose());
}

// Eigenvalues of a symmetric matrix in ascending order, by cyclic Jacobi
// rotations until the off-diagonal Frobenius mass drops below 1e-12 (scaled
// by the matrix norm when it exceeds 1).
template <typename Derived>
std::vector<typename Derived::Scalar> sym_eigenvalues(const Eigen::MatrixBase<Derived>& m) {
  using Scalar = typename Derived::Scalar;
  using std::abs;
  using std::sqrt;
  if (m.rows() != m.cols()) throw SizeError("sym_eigenvalues: matrix is not square");
  const Eigen::Index n = m.rows();
  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> a = m;
  const Scalar scale = std::max<Scalar>(Scalar(1), a.cwiseAbs().maxCoeff());
  if (n > 0 && (a - a.transpose()).cwiseAbs().maxCoeff() > Scalar(1e-12) * scale) {
    throw std::invalid_argument("sym_eigenvalues: matrix is not symmetric");
  }
  auto off_mass = [&] {
    Scalar s = 0;
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = 0; j < n; ++j)
        if (i != j) s += a(i, j) * a(i, j);
    return sqrt(s);
  };
  const Scalar tol = Scalar(1e-12) * std::max<Scalar>(Scalar(1), a.norm());
  for (int sweep = 0; sweep < 100 && off_mass() >= tol; ++sweep) {
    for (Eigen::Index p = 0; p + 1 < n; ++p) {
      for (Eigen::Index q = p + 1; q < n; ++q) {
        const Scalar apq = a(p, q);
        if (apq == Scalar(0)) continue;
        const Scalar theta = (a(q, q) - a(p, p)) / (Scalar(2) * apq);
        const Scalar t = (theta >= 0 ? Scalar(1) : Scalar(-1)) /
                         (abs(theta) + sqrt(theta * theta + Scalar(1)));
        const Scalar c = Scalar(1) / sqrt(t * t + Scalar(1));
        const Scalar s = t * c;
        for (Eigen::Index k = 0; k < n; ++k) {
          const Scalar akp = a(k, p), akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (Eigen::Index k = 0; k < n; ++k) {
          const Scalar apk = a(p, k), aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
      }
    }
  }
  std::vector<Scalar> eig(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) eig[static_cast<std::size_t>(i)] = a(i, i);
  std::sort(eig.begin(), eig.end());
  return eig;
}

// Rank by Gaussian elimination with partial pivoting; pivots with magnitude
// below rel_tol * max|M| count as zero.
template <typename Derived>
int matrix_rank(const Eigen::MatrixBase<Derived>& m, double rel_tol = 1e-8) {
  using Scalar = typename Derived::Scalar;
  using std::abs;
  if (!(rel_tol > 0)) throw std::invalid_argument("matrix_rank: rel_tol must be positive");
  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> a = m;
  if (a.size() == 0) return 0;
  const Scalar threshold = Scalar(rel_tol) * a.cwiseAbs().maxCoeff();
  int rank = 0;
  const Eigen::Index rows = a.rows(), cols = a.cols();
  for (Eigen::Index col = 0; col < cols && rank < rows; ++col) {
    Eigen::Index pivot = rank;
    for (Eigen::Index r = rank + 1; r < rows; ++r)
      if (abs(a(r, col)) > abs(a(pivot, col))) pivot = r;
    if (!(abs(a(pivot, col)) > threshold)) continue;
    a.row(pivot).swap(a.row(rank));
    for (Eigen::Index r = rank + 1; r < rows; ++r) {
      const Scalar f = a(r, col) / a(rank, col);
      if (f != Scalar(0)) a.row(r) -= f * a.row(rank);
    }
    ++rank;
  }
  return rank;
}

}  // namespace pignn
