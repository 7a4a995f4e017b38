#pragma once

#include "cbm/model.hpp"

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include <cmath>
#include <iosfwd>
#include <stdexcept>

namespace cbm {

// Compressed-row storage. Within a row, column indices are strictly increasing.
template <typename Scalar = double>
using SparseMatrix = Eigen::SparseMatrix<Scalar, Eigen::RowMajor, int>;

template <typename Scalar = double>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

/// Signed adjacency J, degrees and per-node neighbor lists (the rows of J).
struct OperatorBundle
{
  SparseMatrix<double> J;
  Eigen::VectorXi      degree;

  explicit OperatorBundle(CbmInstance const &instance);

  int n() const { return static_cast<int>(J.rows()); }
  int m() const { return static_cast<int>(J.nonZeros() / 2); }
};

/// Directed edges i->j enumerated in the CSR order of J: ordinal k is the
/// storage position of entry (i, j). reverse(k) is the ordinal of j->i.
class DirectedEdgeIndex
{
public:
  explicit DirectedEdgeIndex(SparseMatrix<double> const &J);

  int size() const { return static_cast<int>(head_.size()); }
  int tail(int k) const { return tail_[static_cast<std::size_t>(k)]; }
  int head(int k) const { return head_[static_cast<std::size_t>(k)]; }
  int reverse(int k) const { return reverse_[static_cast<std::size_t>(k)]; }
  /// Ordinal of i->j, or -1 if (i, j) is not an edge.
  int index(int i, int j) const;
  /// Outgoing edges of node i occupy ordinals [first_out(i), first_out(i + 1)).
  int first_out(int i) const { return offsets_[static_cast<std::size_t>(i)]; }

private:
  std::vector<int> offsets_;
  std::vector<int> tail_;
  std::vector<int> head_;
  std::vector<int> reverse_;
};

/// Non-backtracking operator on directed edges:
/// B(i->j, k->l) = J_kl when j == k and l != i.
template <typename Scalar = double>
SparseMatrix<Scalar> build_b(OperatorBundle const &ops)
{
  DirectedEdgeIndex const idx(ops.J);
  auto const             *outer = ops.J.outerIndexPtr();
  auto const             *inner = ops.J.innerIndexPtr();
  auto const             *val = ops.J.valuePtr();

  std::int64_t nnz = 0;
  for (int v = 0; v < ops.n(); ++v) {
    std::int64_t const d = ops.degree(v);
    nnz += d * (d - 1);
  }

  SparseMatrix<Scalar> B(idx.size(), idx.size());
  B.reserve(nnz);
  for (int k = 0; k < idx.size(); ++k) {
    B.startVec(k);
    int const i = idx.tail(k);
    int const j = idx.head(k);
    for (int p = outer[j]; p < outer[j + 1]; ++p) {
      if (inner[p] != i) { B.insertBack(k, p) = static_cast<Scalar>(val[p]); }
    }
  }
  B.finalize();
  return B;
}

/// The 2n x 2n matrix [[0, D - 1], [-1, J]]. Only structural nonzeros are stored,
/// so rows of degree-one vertices have an empty top-right block.
template <typename Scalar = double>
SparseMatrix<Scalar> build_bprime(OperatorBundle const &ops)
{
  int const n = ops.n();
  SparseMatrix<Scalar> M(2 * n, 2 * n);
  M.reserve(2 * static_cast<std::int64_t>(n) + ops.J.nonZeros());
  for (int i = 0; i < n; ++i) {
    M.startVec(i);
    if (ops.degree(i) != 1) { M.insertBack(i, n + i) = static_cast<Scalar>(ops.degree(i) - 1); }
  }
  for (int i = 0; i < n; ++i) {
    M.startVec(n + i);
    M.insertBack(n + i, i) = Scalar(-1);
    for (typename SparseMatrix<double>::InnerIterator it(ops.J, i); it; ++it) {
      M.insertBack(n + i, n + static_cast<int>(it.col())) = static_cast<Scalar>(it.value());
    }
  }
  M.finalize();
  return M;
}

/// H(x) = (x^2 - 1) 1 - x J + D. The diagonal is always stored.
template <typename Scalar = double>
SparseMatrix<Scalar> build_bethe_hessian(OperatorBundle const &ops, Scalar x)
{
  int const n = ops.n();
  SparseMatrix<Scalar> H(n, n);
  H.reserve(n + ops.J.nonZeros());
  for (int i = 0; i < n; ++i) {
    H.startVec(i);
    Scalar const diag = x * x - Scalar(1) + static_cast<Scalar>(ops.degree(i));
    bool         placed = false;
    for (typename SparseMatrix<double>::InnerIterator it(ops.J, i); it; ++it) {
      int const j = static_cast<int>(it.col());
      if (!placed && j > i) {
        H.insertBack(i, i) = diag;
        placed = true;
      }
      H.insertBack(i, j) = -x * static_cast<Scalar>(it.value());
    }
    if (!placed) { H.insertBack(i, i) = diag; }
  }
  H.finalize();
  return H;
}

template <typename Scalar = double>
SparseMatrix<Scalar> build_b(CbmInstance const &instance)
{
  return build_b<Scalar>(OperatorBundle(instance));
}

template <typename Scalar = double>
SparseMatrix<Scalar> build_bprime(CbmInstance const &instance)
{
  return build_bprime<Scalar>(OperatorBundle(instance));
}

template <typename Scalar = double>
SparseMatrix<Scalar> build_bethe_hessian(CbmInstance const &instance, Scalar x)
{
  return build_bethe_hessian<Scalar>(OperatorBundle(instance), x);
}

/// out = M v. Reentrant; touches only `out`.
template <typename Scalar>
void matvec(SparseMatrix<Scalar> const &M, Eigen::Ref<Vector<Scalar> const> const &v,
            Eigen::Ref<Vector<Scalar>> out)
{
  if (v.size() != M.cols() || out.size() != M.rows()) {
    throw std::invalid_argument("matvec: dimension mismatch");
  }
  auto const *outer = M.outerIndexPtr();
  auto const *inner = M.innerIndexPtr();
  auto const *val = M.valuePtr();
  for (Eigen::Index r = 0; r < M.rows(); ++r) {
    Scalar acc(0);
    for (int p = outer[r]; p < outer[r + 1]; ++p) { acc += val[p] * v[inner[p]]; }
    out[r] = acc;
  }
}

template <typename Scalar>
Vector<Scalar> matvec(SparseMatrix<Scalar> const &M, Eigen::Ref<Vector<Scalar> const> const &v)
{
  Vector<Scalar> out(M.rows());
  matvec<Scalar>(M, v, out);
  return out;
}

/// Structural CSR checks: monotone offsets, strictly increasing columns, finite values.
template <typename Scalar>
bool is_well_formed(SparseMatrix<Scalar> const &M)
{
  if (!M.isCompressed()) { return false; }
  auto const *outer = M.outerIndexPtr();
  for (Eigen::Index r = 0; r < M.rows(); ++r) {
    if (outer[r + 1] < outer[r]) { return false; }
    for (int p = outer[r]; p < outer[r + 1]; ++p) {
      auto const c = M.innerIndexPtr()[p];
      if (c < 0 || c >= M.cols()) { return false; }
      if (p > outer[r] && M.innerIndexPtr()[p - 1] >= c) { return false; }
      if (!std::isfinite(static_cast<double>(M.valuePtr()[p]))) { return false; }
    }
  }
  return true;
}

struct EigvecRelations
{
  double          relation_residual;     // max_i |lambda v'_i - (d_i - 1) v'_{n+i}| / |v'|_inf
  double          incoming_sum_residual; // max_i |sum_{j in di} v_{j->i} - v'_i| / |v'|_inf
  double          b_residual;            // |B v - lambda v|_inf / |v|_inf
  Eigen::VectorXd b_vector;              // edge-space vector indexed by DirectedEdgeIndex
};

/// Checks a real eigenpair of B' against the node/edge relations and lifts it
/// to an eigenvector of B by solving, for each edge pair,
///   lambda v_{i->j} + J_ij v_{j->i} = u_j,   u = second block of v'.
/// Throws std::domain_error at lambda = +-1 where the reduction is invalid.
EigvecRelations bprime_eigvec_relations_check(CbmInstance const &instance, double lambda,
                                              Eigen::Ref<Eigen::VectorXd const> const &vprime);

/// Coordinate dump: "nrows ncols nnz" then one "row col value" line per entry.
void write_coordinate(SparseMatrix<double> const &M, std::ostream &out);

extern template SparseMatrix<double> build_b<double>(OperatorBundle const &);
extern template SparseMatrix<double> build_bprime<double>(OperatorBundle const &);
extern template SparseMatrix<double> build_bethe_hessian<double>(OperatorBundle const &, double);

} // namespace cbm
