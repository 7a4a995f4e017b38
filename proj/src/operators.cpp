#include "cbm/operators.hpp"

#include <algorithm>
#include <ostream>

namespace cbm {

OperatorBundle::OperatorBundle(CbmInstance const &instance)
{
  auto const n = static_cast<int>(instance.n());
  std::vector<Eigen::Triplet<double, int>> triplets;
  triplets.reserve(2 * instance.edges.size());
  for (auto const &e : instance.edges) {
    triplets.emplace_back(e.i, e.j, e.w);
    triplets.emplace_back(e.j, e.i, e.w);
  }
  J.resize(n, n);
  J.setFromTriplets(triplets.begin(), triplets.end());
  J.makeCompressed();
  degree.resize(n);
  for (int i = 0; i < n; ++i) { degree(i) = J.outerIndexPtr()[i + 1] - J.outerIndexPtr()[i]; }
}

DirectedEdgeIndex::DirectedEdgeIndex(SparseMatrix<double> const &J)
{
  auto const n = static_cast<int>(J.rows());
  auto const *outer = J.outerIndexPtr();
  auto const *inner = J.innerIndexPtr();
  offsets_.assign(outer, outer + n + 1);
  auto const size = static_cast<std::size_t>(offsets_.back());
  tail_.resize(size);
  head_.assign(inner, inner + size);
  reverse_.resize(size);
  for (int i = 0; i < n; ++i) {
    for (int p = outer[i]; p < outer[i + 1]; ++p) { tail_[static_cast<std::size_t>(p)] = i; }
  }
  for (std::size_t k = 0; k < size; ++k) {
    reverse_[k] = index(head_[k], tail_[k]);
    if (reverse_[k] < 0) { throw std::invalid_argument("DirectedEdgeIndex: weight matrix is not symmetric"); }
  }
}

int DirectedEdgeIndex::index(int i, int j) const
{
  auto const first = head_.begin() + offsets_[static_cast<std::size_t>(i)];
  auto const last = head_.begin() + offsets_[static_cast<std::size_t>(i) + 1];
  auto const it = std::lower_bound(first, last, j);
  if (it == last || *it != j) { return -1; }
  return static_cast<int>(it - head_.begin());
}

EigvecRelations bprime_eigvec_relations_check(CbmInstance const &instance, double lambda,
                                              Eigen::Ref<Eigen::VectorXd const> const &vprime)
{
  if (std::abs(lambda - 1.0) < 1e-12 || std::abs(lambda + 1.0) < 1e-12) {
    throw std::domain_error("reduction invalid at lambda = +-1");
  }
  OperatorBundle const ops(instance);
  int const            n = ops.n();
  if (vprime.size() != 2 * n) { throw std::invalid_argument("eigenvector length must be 2n"); }

  double const scale = std::max(vprime.lpNorm<Eigen::Infinity>(), std::numeric_limits<double>::min());
  auto const   first = vprime.head(n);
  auto const   second = vprime.tail(n);

  EigvecRelations out{};
  for (int i = 0; i < n; ++i) {
    double const r = std::abs(lambda * first(i) - (ops.degree(i) - 1) * second(i));
    out.relation_residual = std::max(out.relation_residual, r / scale);
  }

  DirectedEdgeIndex const idx(ops.J);
  auto const             *w = ops.J.valuePtr();
  double const            det = lambda * lambda - 1.0;
  out.b_vector.resize(idx.size());
  for (int k = 0; k < idx.size(); ++k) {
    int const i = idx.tail(k);
    int const j = idx.head(k);
    out.b_vector(k) = (lambda * second(j) - w[k] * second(i)) / det;
  }

  Eigen::VectorXd incoming = Eigen::VectorXd::Zero(n);
  for (int k = 0; k < idx.size(); ++k) { incoming(idx.head(k)) += out.b_vector(k); }
  out.incoming_sum_residual = (incoming - first).lpNorm<Eigen::Infinity>() / scale;

  auto const B = build_b<double>(ops);
  Eigen::VectorXd const Bv = matvec<double>(B, out.b_vector);
  double const vnorm = out.b_vector.lpNorm<Eigen::Infinity>();
  out.b_residual = vnorm > 0.0 ? (Bv - lambda * out.b_vector).lpNorm<Eigen::Infinity>() / vnorm : 0.0;
  return out;
}

void write_coordinate(SparseMatrix<double> const &M, std::ostream &out)
{
  out << M.rows() << ' ' << M.cols() << ' ' << M.nonZeros() << '\n';
  for (Eigen::Index r = 0; r < M.outerSize(); ++r) {
    for (SparseMatrix<double>::InnerIterator it(M, r); it; ++it) {
      out << it.row() << ' ' << it.col() << ' ' << format_double(it.value()) << '\n';
    }
  }
}

template SparseMatrix<double> build_b<double>(OperatorBundle const &);
template SparseMatrix<double> build_bprime<double>(OperatorBundle const &);
template SparseMatrix<double> build_bethe_hessian<double>(OperatorBundle const &, double);

} // namespace cbm
