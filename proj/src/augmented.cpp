#include "gsmote/augmented.hpp"

#include <stdexcept>

namespace gsmote {

using ad::Var;

AugmentedGraph AugmentedGraph::real_only(const SparseHandle& adjacency) {
  AugmentedGraph g;
  g.base = adjacency;
  g.n = adjacency->rows();
  g.provenance.assign(static_cast<std::size_t>(g.n), Provenance::real);
  return g;
}

AugmentedGraph AugmentedGraph::with_embeddings(const SparseHandle& adjacency, const Var& rows,
                                               std::vector<int> labels) {
  AugmentedGraph g = real_only(adjacency);
  if (rows.rows() != g.n) throw ad::ShapeError("AugmentedGraph: embeddings must have n rows");
  g.embeddings = rows;
  g.real_rows_ = rows;
  g.labels = std::move(labels);
  return g;
}

void AugmentedGraph::append(const Var& edges, Eigen::Index count, Provenance kind, const Var& rows,
                            std::span<const int> node_labels) {
  if (count == 0) return;
  if (rows.defined()) {
    if (rows.rows() != count) throw ad::ShapeError("AugmentedGraph::append: row count mismatch");
    embeddings = ad::concat_rows(embeddings, rows);
  }
  labels.insert(labels.end(), node_labels.begin(), node_labels.end());
  Var block = edges.defined() ? edges : Var::constant(Matrix::Zero(count, n));
  if (block.rows() != count || block.cols() != n) {
    throw ad::ShapeError("AugmentedGraph::append: edge block must be count x n");
  }
  extra_edges = extra_edges.defined() ? ad::concat_rows(extra_edges, block) : block;
  extra += count;
  provenance.insert(provenance.end(), static_cast<std::size_t>(count), kind);
}

Var AugmentedGraph::propagate(const Var& y) const {
  if (y.rows() != total()) {
    throw ad::ShapeError("AugmentedGraph::propagate: expected " + std::to_string(total()) + " rows");
  }
  if (extra == 0) return ad::sparse_matmul(base, y);
  const Var real = ad::slice_rows(y, 0, n);
  const Var appended = ad::slice_rows(y, n, extra);
  const Var top = ad::add(ad::sparse_matmul(base, real),
                          ad::matmul(ad::transpose(extra_edges), appended));
  const Var bottom = ad::matmul(extra_edges, real);
  return ad::concat_rows(top, bottom);
}

Var AugmentedGraph::degree() const {
  Matrix real(n, 1);
  for (Eigen::Index r = 0; r < n; ++r) {
    double s = 0.0;
    for (SparseMatrix::InnerIterator it(*base, r); it; ++it) s += it.value();
    real(r, 0) = s;
  }
  const Var base_degree = Var::constant(std::move(real));
  if (extra == 0) return base_degree;
  const Var top = ad::add(base_degree, ad::transpose(ad::col_sum(extra_edges)));
  return ad::concat_rows(top, ad::row_sum(extra_edges));
}

Matrix AugmentedGraph::dense_adjacency() const {
  Matrix out = Matrix::Zero(total(), total());
  out.topLeftCorner(n, n) = Matrix(*base);
  if (extra > 0) {
    out.bottomLeftCorner(extra, n) = extra_edges.data();
    out.topRightCorner(n, extra) = extra_edges.data().transpose();
  }
  return out;
}

}  // namespace gsmote
