#include "gsmote/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <unordered_map>

namespace gsmote::ad {

namespace {

thread_local bool g_grad_enabled = true;

constexpr double kTiny = std::numeric_limits<double>::min();

using RowMajorMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// exp overflows to inf for very negative x, which still yields 0.
template <typename Expr>
auto logistic(const Expr& x) {
  return (1.0 + (-x).exp()).inverse();
}

template <typename Expr>
void accumulate(Matrix* dst, const Expr& value) {
  if (!dst) return;
  if (dst->size() == 0) {
    *dst = value;
  } else {
    *dst += value;
  }
}

Var make_result(Matrix data, const char* op, std::initializer_list<const Var*> inputs, BackwardFn fn) {
  auto node = std::make_shared<Node>();
  node->data = std::move(data);
  node->op = op;
  bool needs = false;
  if (g_grad_enabled) {
    for (const Var* in : inputs) needs = needs || in->requires_grad();
  }
  if (needs) {
    node->requires_grad = true;
    for (const Var* in : inputs) node->parents.push_back(in->node());
    node->backward = std::move(fn);
  }
  return Var(std::move(node));
}

void require(bool ok, const std::string& what) {
  if (!ok) throw ShapeError(what);
}

std::string shape(const Var& v) {
  return std::to_string(v.rows()) + "x" + std::to_string(v.cols());
}

void require_same_shape(const Var& a, const Var& b, const char* op) {
  require(a.rows() == b.rows() && a.cols() == b.cols(),
          std::string(op) + ": shape mismatch " + shape(a) + " vs " + shape(b));
}

}  // namespace

Var Var::constant(Matrix value) {
  auto node = std::make_shared<Node>();
  node->data = std::move(value);
  return Var(std::move(node));
}

Var Var::parameter(Matrix value) {
  auto node = std::make_shared<Node>();
  node->data = std::move(value);
  node->requires_grad = true;
  node->op = "parameter";
  return Var(std::move(node));
}

double Var::item() const {
  if (rows() != 1 || cols() != 1) throw ShapeError("item() on a " + shape(*this) + " value");
  return node_->data(0, 0);
}

NoGradGuard::NoGradGuard() : previous_(g_grad_enabled) { g_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { g_grad_enabled = previous_; }
bool grad_enabled() { return g_grad_enabled; }

Var matmul(const Var& a, const Var& b) {
  require(a.cols() == b.rows(), "matmul: inner dimensions differ " + shape(a) + " * " + shape(b));
  Matrix out = a.data() * b.data();
  return make_result(std::move(out), "matmul", {&a, &b},
                     [](const Node& self, const Matrix& g, std::span<Matrix* const> adj) {
                       const Matrix& x = self.parents[0]->data;
                       const Matrix& y = self.parents[1]->data;
                       if (adj[0]) accumulate(adj[0], g * y.transpose());
                       if (adj[1]) accumulate(adj[1], x.transpose() * g);
                     });
}

Var sparse_matmul(const SparseHandle& s, const Var& b) {
  require(static_cast<bool>(s), "sparse_matmul: null sparse operand");
  require(s->cols() == b.rows(), "sparse_matmul: inner dimensions differ");
  // Row-major dense operands keep the row-major sparse product contiguous.
  const RowMajorMatrix rhs = b.data();
  const RowMajorMatrix product = (*s) * rhs;
  return make_result(Matrix(product), "sparse_matmul", {&b},
                     [s](const Node&, const Matrix& g, std::span<Matrix* const> adj) {
                       const RowMajorMatrix upstream = g;
                       const RowMajorMatrix back = s->transpose() * upstream;
                       accumulate(adj[0], back);
                     });
}

Var transpose(const Var& a) {
  Matrix out = a.data().transpose();
  return make_result(std::move(out), "transpose", {&a},
                     [](const Node&, const Matrix& g, std::span<Matrix* const> adj) {
                       accumulate(adj[0], g.transpose());
                     });
}

Var concat_cols(const Var& a, const Var& b) {
  require(a.rows() == b.rows(), "concat_cols: row counts differ " + shape(a) + " | " + shape(b));
  Matrix out(a.rows(), a.cols() + b.cols());
  out << a.data(), b.data();
  const Eigen::Index ca = a.cols();
  const Eigen::Index cb = b.cols();
  return make_result(std::move(out), "concat_cols", {&a, &b},
                     [ca, cb](const Node&, const Matrix& g, std::span<Matrix* const> adj) {
                       if (adj[0]) accumulate(adj[0], g.leftCols(ca));
                       if (adj[1]) accumulate(adj[1], g.rightCols(cb));
                     });
}

Var concat_rows(const Var& a, const Var& b) {
  require(a.cols() == b.cols(), "concat_rows: column counts differ " + shape(a) + " / " + shape(b));
  Matrix out(a.rows() + b.rows(), a.cols());
  out << a.data(), b.data();
  const Eigen::Index ra = a.rows();
  const Eigen::Index rb = b.rows();
  return make_result(std::move(out), "concat_rows", {&a, &b},
                     [ra, rb](const Node&, const Matrix& g, std::span<Matrix* const> adj) {
                       if (adj[0]) accumulate(adj[0], g.topRows(ra));
                       if (adj[1]) accumulate(adj[1], g.bottomRows(rb));
                     });
}

Var slice_rows(const Var& a, Eigen::Index begin, Eigen::Index count) {
  require(begin >= 0 && count >= 0 && begin + count <= a.rows(), "slice_rows: range out of bounds");
  Matrix out = a.data().middleRows(begin, count);
  const Eigen::Index rows = a.rows();
  const Eigen::Index cols = a.cols();
  return make_result(std::move(out), "slice_rows", {&a},
                     [begin, count, rows, cols](const Node&, const Matrix& g,
                                                std::span<Matrix* const> adj) {
                       Matrix* dst = adj[0];
                       if (dst->size() == 0) *dst = Matrix::Zero(rows, cols);
                       dst->middleRows(begin, count) += g;
                     });
}

Var mix_rows(const Var& a, std::span<const NodeIndex> first, std::span<const NodeIndex> second,
             std::span<const double> weight) {
  require(first.size() == second.size() && first.size() == weight.size(),
          "mix_rows: index and weight lists differ in length");
  const auto k = static_cast<Eigen::Index>(first.size());
  Matrix out(k, a.cols());
  for (Eigen::Index r = 0; r < k; ++r) {
    const auto i = first[static_cast<std::size_t>(r)];
    const auto j = second[static_cast<std::size_t>(r)];
    require(i >= 0 && i < a.rows() && j >= 0 && j < a.rows(), "mix_rows: row index out of range");
    const double w = weight[static_cast<std::size_t>(r)];
    out.row(r) = (1.0 - w) * a.data().row(i) + w * a.data().row(j);
  }
  std::vector<NodeIndex> fi(first.begin(), first.end());
  std::vector<NodeIndex> si(second.begin(), second.end());
  std::vector<double> wi(weight.begin(), weight.end());
  const Eigen::Index rows = a.rows();
  const Eigen::Index cols = a.cols();
  return make_result(std::move(out), "mix_rows", {&a},
                     [fi = std::move(fi), si = std::move(si), wi = std::move(wi), rows, cols](
                         const Node&, const Matrix& g, std::span<Matrix* const> adj) {
                       Matrix* dst = adj[0];
                       if (dst->size() == 0) *dst = Matrix::Zero(rows, cols);
                       for (std::size_t r = 0; r < fi.size(); ++r) {
                         const auto row = static_cast<Eigen::Index>(r);
                         dst->row(fi[r]) += (1.0 - wi[r]) * g.row(row);
                         dst->row(si[r]) += wi[r] * g.row(row);
                       }
                     });
}

Var add(const Var& a, const Var& b) {
  require_same_shape(a, b, "add");
  Matrix out = a.data() + b.data();
  return make_result(std::move(out), "add", {&a, &b},
                     [](const Node&, const Matrix& g, std::span<Matrix* const> adj) {
                       accumulate(adj[0], g);
                       accumulate(adj[1], g);
                     });
}

Var sub(const Var& a, const Var& b) {
  require_same_shape(a, b, "sub");
  Matrix out = a.data() - b.data();
  return make_result(std::move(out), "sub", {&a, &b},
                     [](const Node&, const Matrix& g, std::span<Matrix* const> adj) {
                       accumulate(adj[0], g);
                       if (adj[1]) accumulate(adj[1], -g);
                     });
}

Var sub_sparse(const Var& a, const SparseHandle& s) {
  require(static_cast<bool>(s) && s->rows() == a.rows() && s->cols() == a.cols(),
          "sub_sparse: shape mismatch");
  Matrix out = a.data();
  for (Eigen::Index r = 0; r < s->outerSize(); ++r) {
    for (SparseMatrix::InnerIterator it(*s, r); it; ++it) out(it.row(), it.col()) -= it.value();
  }
  return make_result(std::move(out), "sub_sparse", {&a},
                     [](const Node&, const Matrix& g, std::span<Matrix* const> adj) {
                       accumulate(adj[0], g);
                     });
}

Var scale(const Var& a, double factor) {
  Matrix out = a.data() * factor;
  return make_result(std::move(out), "scale", {&a},
                     [factor](const Node&, const Matrix& g, std::span<Matrix* const> adj) {
                       accumulate(adj[0], g * factor);
                     });
}

Var hadamard(const Var& a, const Var& b) {
  require_same_shape(a, b, "hadamard");
  Matrix out = a.data().cwiseProduct(b.data());
  return make_result(std::move(out), "hadamard", {&a, &b},
                     [](const Node& self, const Matrix& g, std::span<Matrix* const> adj) {
                       if (adj[0]) accumulate(adj[0], g.cwiseProduct(self.parents[1]->data));
                       if (adj[1]) accumulate(adj[1], g.cwiseProduct(self.parents[0]->data));
                     });
}

Var relu(const Var& a) {
  Matrix out = a.data().cwiseMax(0.0);
  return make_result(std::move(out), "relu", {&a},
                     [](const Node& self, const Matrix& g, std::span<Matrix* const> adj) {
                       // Subgradient at exactly 0 is 0.
                       const Matrix& x = self.parents[0]->data;
                       accumulate(adj[0], (x.array() > 0.0).select(g, 0.0));
                     });
}

Var sigmoid(const Var& a) {
  Matrix out = logistic(a.data().array()).matrix();
  return make_result(std::move(out), "sigmoid", {&a},
                     [](const Node& self, const Matrix& g, std::span<Matrix* const> adj) {
                       const auto y = self.data.array();
                       accumulate(adj[0], (g.array() * y * (1.0 - y)).matrix());
                     });
}

Var power(const Var& a, double exponent) {
  Matrix out = a.data().array().pow(exponent).matrix();
  return make_result(std::move(out), "power", {&a},
                     [exponent](const Node& self, const Matrix& g, std::span<Matrix* const> adj) {
                       const auto x = self.parents[0]->data.array();
                       accumulate(adj[0], (g.array() * exponent * x.pow(exponent - 1.0)).matrix());
                     });
}

Var safe_reciprocal(const Var& a) {
  Matrix out = a.data().unaryExpr([](double x) { return x != 0.0 ? 1.0 / x : 0.0; });
  return make_result(std::move(out), "safe_reciprocal", {&a},
                     [](const Node& self, const Matrix& g, std::span<Matrix* const> adj) {
                       const auto y = self.data.array();
                       accumulate(adj[0], (-g.array() * y * y).matrix());
                     });
}

Var row_softmax(const Var& a) {
  require(a.cols() > 0, "row_softmax: no columns");
  Matrix out(a.rows(), a.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    const double top = a.data().row(i).maxCoeff();
    out.row(i) = (a.data().row(i).array() - top).exp().matrix();
    out.row(i) /= out.row(i).sum();
  }
  return make_result(std::move(out), "row_softmax", {&a},
                     [](const Node& self, const Matrix& g, std::span<Matrix* const> adj) {
                       const Matrix& p = self.data;
                       const Vector dot = g.cwiseProduct(p).rowwise().sum();
                       accumulate(adj[0], (p.array() * (g.colwise() - dot).array()).matrix());
                     });
}

Var row_sum(const Var& a) {
  Matrix out = a.data().rowwise().sum();
  const Eigen::Index cols = a.cols();
  return make_result(std::move(out), "row_sum", {&a},
                     [cols](const Node&, const Matrix& g, std::span<Matrix* const> adj) {
                       accumulate(adj[0], g.replicate(1, cols));
                     });
}

Var col_sum(const Var& a) {
  Matrix out = a.data().colwise().sum();
  const Eigen::Index rows = a.rows();
  return make_result(std::move(out), "col_sum", {&a},
                     [rows](const Node&, const Matrix& g, std::span<Matrix* const> adj) {
                       accumulate(adj[0], g.replicate(rows, 1));
                     });
}

Var scale_rows(const Var& a, const Var& s) {
  require(s.cols() == 1 && s.rows() == a.rows(),
          "scale_rows: scale must be a " + std::to_string(a.rows()) + "x1 column, got " + shape(s));
  Matrix out = a.data().array().colwise() * s.data().col(0).array();
  return make_result(std::move(out), "scale_rows", {&a, &s},
                     [](const Node& self, const Matrix& g, std::span<Matrix* const> adj) {
                       const Matrix& x = self.parents[0]->data;
                       const Matrix& sc = self.parents[1]->data;
                       if (adj[0]) accumulate(adj[0], (g.array().colwise() * sc.col(0).array()).matrix());
                       if (adj[1]) accumulate(adj[1], Matrix(g.cwiseProduct(x).rowwise().sum()));
                     });
}

Var sum(const Var& a) {
  Matrix out = Matrix::Constant(1, 1, a.data().sum());
  const Eigen::Index rows = a.rows();
  const Eigen::Index cols = a.cols();
  return make_result(std::move(out), "sum", {&a},
                     [rows, cols](const Node&, const Matrix& g, std::span<Matrix* const> adj) {
                       accumulate(adj[0], Matrix::Constant(rows, cols, g(0, 0)));
                     });
}

Var frobenius_sq(const Var& a) {
  Matrix out = Matrix::Constant(1, 1, a.data().squaredNorm());
  return make_result(std::move(out), "frobenius_sq", {&a},
                     [](const Node& self, const Matrix& g, std::span<Matrix* const> adj) {
                       accumulate(adj[0], (2.0 * g(0, 0)) * self.parents[0]->data);
                     });
}

Var sigmoid_gram_sq_error(const Var& h, const Var& s, const SparseHandle& a) {
  require(h.cols() == s.rows() && s.rows() == s.cols(), "sigmoid_gram_sq_error: S must be square and match h");
  require(static_cast<bool>(a) && a->rows() == h.rows() && a->cols() == h.rows(),
          "sigmoid_gram_sq_error: target must be n x n");
  const Matrix hs = h.data() * s.data();
  Matrix e;
  e.noalias() = hs * h.data().transpose();
  e.array() = logistic(e.array());
  double total = e.squaredNorm();
  for (Eigen::Index r = 0; r < a->outerSize(); ++r) {
    for (SparseMatrix::InnerIterator it(*a, r); it; ++it) {
      const double x = e(it.row(), it.col());
      total += (x - it.value()) * (x - it.value()) - x * x;
    }
  }
  auto scores = std::make_shared<const Matrix>(std::move(e));
  auto projected = std::make_shared<const Matrix>(hs);
  return make_result(Matrix::Constant(1, 1, total), "sigmoid_gram_sq_error", {&h, &s},
                     [a, scores, projected](const Node& self, const Matrix& g, std::span<Matrix* const> adj) {
                       const Matrix& e = *scores;
                       // d/dZ of sum (sigmoid(Z) - A)^2.
                       Matrix dz = (2.0 * g(0, 0)) * (e.array().square() * (1.0 - e.array())).matrix();
                       for (Eigen::Index r = 0; r < a->outerSize(); ++r) {
                         for (SparseMatrix::InnerIterator it(*a, r); it; ++it) {
                           const double x = e(it.row(), it.col());
                           dz(it.row(), it.col()) -= 2.0 * g(0, 0) * it.value() * x * (1.0 - x);
                         }
                       }
                       const Matrix& hv = self.parents[0]->data;
                       const Matrix& sv = self.parents[1]->data;
                       Matrix d_hs;
                       d_hs.noalias() = dz * hv;
                       if (adj[0]) {
                         Matrix dh;
                         dh.noalias() = dz.transpose() * (*projected);
                         dh.noalias() += d_hs * sv.transpose();
                         accumulate(adj[0], dh);
                       }
                       if (adj[1]) accumulate(adj[1], hv.transpose() * d_hs);
                     });
}

Var masked_cross_entropy(const Var& probs, const Matrix& targets, std::span<const NodeIndex> rows,
                         std::span<const double> row_weights) {
  if (rows.empty()) throw std::invalid_argument("masked_cross_entropy: empty mask");
  require(targets.rows() == static_cast<Eigen::Index>(rows.size()) && targets.cols() == probs.cols(),
          "masked_cross_entropy: targets must be |mask| x classes");
  require(row_weights.empty() || row_weights.size() == rows.size(),
          "masked_cross_entropy: one weight per masked row expected");
  const Matrix& p = probs.data();
  const double inv = 1.0 / static_cast<double>(rows.size());
  double total = 0.0;
  for (std::size_t k = 0; k < rows.size(); ++k) {
    const auto v = rows[k];
    require(v >= 0 && v < probs.rows(), "masked_cross_entropy: row index out of range");
    const double w = row_weights.empty() ? 1.0 : row_weights[k];
    double row = 0.0;
    for (Eigen::Index c = 0; c < p.cols(); ++c) {
      const double t = targets(static_cast<Eigen::Index>(k), c);
      if (t != 0.0) row -= t * std::log(std::max(p(v, c), kTiny));
    }
    total += w * row;
  }
  std::vector<NodeIndex> idx(rows.begin(), rows.end());
  std::vector<double> weights(row_weights.begin(), row_weights.end());
  return make_result(
      Matrix::Constant(1, 1, total * inv), "masked_cross_entropy", {&probs},
      [idx = std::move(idx), weights = std::move(weights), targets, inv](
          const Node& self, const Matrix& g, std::span<Matrix* const> adj) {
        const Matrix& pr = self.parents[0]->data;
        Matrix* dst = adj[0];
        if (dst->size() == 0) *dst = Matrix::Zero(pr.rows(), pr.cols());
        for (std::size_t k = 0; k < idx.size(); ++k) {
          const double w = weights.empty() ? 1.0 : weights[k];
          for (Eigen::Index c = 0; c < pr.cols(); ++c) {
            const double t = targets(static_cast<Eigen::Index>(k), c);
            if (t != 0.0) {
              (*dst)(idx[k], c) -= g(0, 0) * inv * w * t / std::max(pr(idx[k], c), kTiny);
            }
          }
        }
      });
}

void backward(const Var& loss) {
  if (!loss.defined() || loss.rows() != 1 || loss.cols() != 1) {
    throw ShapeError("backward: loss must be a 1x1 value");
  }
  if (!loss.requires_grad()) return;

  // Post-order DFS yields parents before children.
  std::vector<Node*> order;
  std::unordered_map<const Node*, std::size_t> position;
  std::vector<std::pair<Node*, std::size_t>> stack{{loss.node().get(), 0}};
  std::unordered_map<const Node*, bool> visited{{loss.node().get(), true}};
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->parents.size()) {
      Node* parent = node->parents[next++].get();
      if (parent->requires_grad && !visited[parent]) {
        visited[parent] = true;
        stack.emplace_back(parent, 0);
      }
    } else {
      position[node] = order.size();
      order.push_back(node);
      stack.pop_back();
    }
  }

  std::vector<Matrix> adjoint(order.size());
  adjoint.back() = Matrix::Ones(1, 1);
  std::vector<Matrix*> slots;
  for (std::size_t i = order.size(); i-- > 0;) {
    Node* node = order[i];
    Matrix& g = adjoint[i];
    if (g.size() == 0 && node->data.size() != 0) continue;  // unreachable-by-value branch
    if (node->backward) {
      slots.assign(node->parents.size(), nullptr);
      for (std::size_t p = 0; p < node->parents.size(); ++p) {
        Node* parent = node->parents[p].get();
        if (parent->requires_grad) slots[p] = &adjoint[position.at(parent)];
      }
      node->backward(*node, g, slots);
    } else {
      accumulate(&node->grad, g);
    }
    g.resize(0, 0);
  }
}

double grad_check(const std::function<Var()>& f, Var& param, double h, double floor) {
  param.zero_grad();
  backward(f());
  Matrix analytic = param.has_grad() ? param.grad() : Matrix::Zero(param.rows(), param.cols());
  if (analytic.size() == 0) analytic = Matrix::Zero(param.rows(), param.cols());
  param.zero_grad();

  NoGradGuard guard;
  double worst = 0.0;
  Matrix& x = param.mutable_data();
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    for (Eigen::Index j = 0; j < x.cols(); ++j) {
      const double saved = x(i, j);
      x(i, j) = saved + h;
      const double up = f().item();
      x(i, j) = saved - h;
      const double down = f().item();
      x(i, j) = saved;
      const double numeric = (up - down) / (2.0 * h);
      const double a = analytic(i, j);
      const double denom = std::max({std::abs(a), std::abs(numeric), floor});
      worst = std::max(worst, std::abs(a - numeric) / denom);
    }
  }
  return worst;
}

}  // namespace gsmote::ad
