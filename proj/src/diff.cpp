#include "wee/diff.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <unordered_set>

#include "wee/kernels.hpp"

namespace wee {

std::size_t shape_size(const Shape& s) {
  std::size_t n = 1;
  for (int d : s) n *= static_cast<std::size_t>(d);
  return n;
}

std::string shape_str(const Shape& s) {
  std::ostringstream os;
  os << "[";
  for (std::size_t i = 0; i < s.size(); ++i) os << (i ? "x" : "") << s[i];
  os << "]";
  return os.str();
}

namespace detail {

void ensure_grad(Node& n) {
  if (n.grad.empty()) n.grad.assign(n.values.size(), 0.0);
}

}  // namespace detail

namespace {

using detail::Node;

std::shared_ptr<Node> make_node(Shape shape, std::vector<double> values,
                                std::vector<std::shared_ptr<Node>> parents) {
  auto n = std::make_shared<Node>();
  n->shape = std::move(shape);
  n->values = std::move(values);
  n->parents = std::move(parents);
  for (const auto& p : n->parents) {
    if (p->needs_grad) {
      n->needs_grad = true;
      break;
    }
  }
  return n;
}

void check_positive_shape(const Shape& s) {
  if (s.empty()) throw ShapeError("shape must have at least one extent");
  for (int d : s) {
    if (d <= 0) throw ShapeError("shape extents must be positive, got " + shape_str(s));
  }
}

void check_same_shape(const DiffArray& a, const DiffArray& b, const char* op) {
  if (a.shape() != b.shape()) {
    throw ShapeError(std::string(op) + ": shape mismatch " + shape_str(a.shape()) + " vs " +
                     shape_str(b.shape()));
  }
}

void check_finite(const std::vector<double>& v, const char* op) {
  for (double x : v) {
    if (!std::isfinite(x)) throw InvalidInputError(std::string(op) + ": non-finite input");
  }
}

// Interprets 1-D as a single row, 2-D as rows x cols.
void rows_cols(const DiffArray& x, int& rows, int& cols, const char* op) {
  if (x.ndim() == 1) {
    rows = 1;
    cols = x.dim(0);
  } else if (x.ndim() == 2) {
    rows = x.dim(0);
    cols = x.dim(1);
  } else {
    throw ShapeError(std::string(op) + ": expected 1-D or 2-D, got " + shape_str(x.shape()));
  }
}

}  // namespace

DiffArray DiffArray::constant(Shape shape, std::vector<double> values) {
  check_positive_shape(shape);
  if (shape_size(shape) != values.size()) {
    throw ShapeError("constant: " + std::to_string(values.size()) + " values for shape " +
                     shape_str(shape));
  }
  return DiffArray(make_node(std::move(shape), std::move(values), {}));
}

DiffArray DiffArray::param(Shape shape, std::vector<double> values) {
  DiffArray a = constant(std::move(shape), std::move(values));
  a.n_->requires_grad = true;
  a.n_->needs_grad = true;
  return a;
}

DiffArray DiffArray::zeros(Shape shape, bool requires_grad) {
  check_positive_shape(shape);
  std::vector<double> v(shape_size(shape), 0.0);
  return requires_grad ? param(std::move(shape), std::move(v))
                       : constant(std::move(shape), std::move(v));
}

const std::vector<double>& DiffArray::grad() const {
  if (n_->grad.empty()) throw InvalidInputError("grad requested before a backward pass");
  return n_->grad;
}

double DiffArray::scalar() const {
  if (size() != 1) throw ShapeError("scalar() on array of shape " + shape_str(shape()));
  return n_->values[0];
}

void DiffArray::backward() {
  if (size() != 1) throw ShapeError("backward() requires a scalar, got " + shape_str(shape()));
  if (!n_->needs_grad) return;

  // Iterative post-order DFS over the needs_grad subgraph.
  std::vector<Node*> topo;
  std::unordered_set<Node*> visited;
  std::vector<std::pair<Node*, std::size_t>> stack;
  stack.emplace_back(n_.get(), 0);
  visited.insert(n_.get());
  while (!stack.empty()) {
    auto& [node, next_child] = stack.back();
    bool descended = false;
    while (next_child < node->parents.size()) {
      Node* p = node->parents[next_child++].get();
      if (p->needs_grad && !visited.count(p)) {
        visited.insert(p);
        stack.emplace_back(p, 0);
        descended = true;
        break;
      }
    }
    if (!descended && (stack.back().second >= stack.back().first->parents.size())) {
      topo.push_back(stack.back().first);
      stack.pop_back();
    }
  }

  detail::ensure_grad(*n_);
  n_->grad[0] += 1.0;
  for (auto it = topo.rbegin(); it != topo.rend(); ++it) {
    Node* node = *it;
    if (node->backward_fn) node->backward_fn(*node);
  }
}

// ---------------------------------------------------------------------------
// elementwise / arithmetic
// ---------------------------------------------------------------------------

DiffArray add(const DiffArray& a, const DiffArray& b) {
  check_same_shape(a, b, "add");
  std::vector<double> y(a.size());
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = a.values()[i] + b.values()[i];
  auto n = make_node(a.shape(), std::move(y), {a.node(), b.node()});
  if (n->needs_grad) {
    n->backward_fn = [](Node& self) {
      for (int s = 0; s < 2; ++s) {
        Node& p = *self.parents[s];
        if (!p.needs_grad) continue;
        detail::ensure_grad(p);
        for (std::size_t i = 0; i < self.grad.size(); ++i) p.grad[i] += self.grad[i];
      }
    };
  }
  return DiffArray(n);
}

DiffArray sub(const DiffArray& a, const DiffArray& b) {
  check_same_shape(a, b, "sub");
  std::vector<double> y(a.size());
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = a.values()[i] - b.values()[i];
  auto n = make_node(a.shape(), std::move(y), {a.node(), b.node()});
  if (n->needs_grad) {
    n->backward_fn = [](Node& self) {
      Node& pa = *self.parents[0];
      Node& pb = *self.parents[1];
      if (pa.needs_grad) {
        detail::ensure_grad(pa);
        for (std::size_t i = 0; i < self.grad.size(); ++i) pa.grad[i] += self.grad[i];
      }
      if (pb.needs_grad) {
        detail::ensure_grad(pb);
        for (std::size_t i = 0; i < self.grad.size(); ++i) pb.grad[i] -= self.grad[i];
      }
    };
  }
  return DiffArray(n);
}

DiffArray mul(const DiffArray& a, const DiffArray& b) {
  check_same_shape(a, b, "mul");
  std::vector<double> y(a.size());
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = a.values()[i] * b.values()[i];
  auto n = make_node(a.shape(), std::move(y), {a.node(), b.node()});
  if (n->needs_grad) {
    n->backward_fn = [](Node& self) {
      Node& pa = *self.parents[0];
      Node& pb = *self.parents[1];
      if (pa.needs_grad) {
        detail::ensure_grad(pa);
        for (std::size_t i = 0; i < self.grad.size(); ++i) pa.grad[i] += self.grad[i] * pb.values[i];
      }
      if (pb.needs_grad) {
        detail::ensure_grad(pb);
        for (std::size_t i = 0; i < self.grad.size(); ++i) pb.grad[i] += self.grad[i] * pa.values[i];
      }
    };
  }
  return DiffArray(n);
}

DiffArray neg(const DiffArray& a) { return mul_scalar(a, -1.0); }

DiffArray mul_scalar(const DiffArray& a, double s) {
  std::vector<double> y(a.size());
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = a.values()[i] * s;
  auto n = make_node(a.shape(), std::move(y), {a.node()});
  if (n->needs_grad) {
    n->backward_fn = [s](Node& self) {
      Node& p = *self.parents[0];
      detail::ensure_grad(p);
      for (std::size_t i = 0; i < self.grad.size(); ++i) p.grad[i] += self.grad[i] * s;
    };
  }
  return DiffArray(n);
}

DiffArray add_rowvec(const DiffArray& a, const DiffArray& v) {
  if (a.ndim() != 2 || v.ndim() != 1 || a.dim(1) != v.dim(0)) {
    throw ShapeError("add_rowvec: " + shape_str(a.shape()) + " + " + shape_str(v.shape()));
  }
  const int rows = a.dim(0), cols = a.dim(1);
  std::vector<double> y(a.size());
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c)
      y[static_cast<std::size_t>(r) * cols + c] =
          a.values()[static_cast<std::size_t>(r) * cols + c] + v.values()[c];
  auto n = make_node(a.shape(), std::move(y), {a.node(), v.node()});
  if (n->needs_grad) {
    n->backward_fn = [rows, cols](Node& self) {
      Node& pa = *self.parents[0];
      Node& pv = *self.parents[1];
      if (pa.needs_grad) {
        detail::ensure_grad(pa);
        for (std::size_t i = 0; i < self.grad.size(); ++i) pa.grad[i] += self.grad[i];
      }
      if (pv.needs_grad) {
        detail::ensure_grad(pv);
        for (int r = 0; r < rows; ++r)
          for (int c = 0; c < cols; ++c)
            pv.grad[c] += self.grad[static_cast<std::size_t>(r) * cols + c];
      }
    };
  }
  return DiffArray(n);
}

// ---------------------------------------------------------------------------
// linear algebra
// ---------------------------------------------------------------------------

DiffArray matmul(const DiffArray& a, const DiffArray& b) {
  if (a.ndim() != 2 || b.ndim() != 2 || a.dim(1) != b.dim(0)) {
    throw ShapeError("matmul: " + shape_str(a.shape()) + " * " + shape_str(b.shape()));
  }
  const int m = a.dim(0), k = a.dim(1), nn = b.dim(1);
  std::vector<double> y(static_cast<std::size_t>(m) * nn);
  kern::matmul_nn(y.data(), a.values().data(), b.values().data(), m, k, nn);
  auto n = make_node({m, nn}, std::move(y), {a.node(), b.node()});
  if (n->needs_grad) {
    n->backward_fn = [m, k, nn](Node& self) {
      Node& pa = *self.parents[0];
      Node& pb = *self.parents[1];
      if (pa.needs_grad) {
        detail::ensure_grad(pa);
        // dA += dY * B^T
        kern::acc_nt(pa.grad.data(), self.grad.data(), pb.values.data(), m, nn, k);
      }
      if (pb.needs_grad) {
        detail::ensure_grad(pb);
        // dB += A^T * dY
        kern::acc_tn(pb.grad.data(), pa.values.data(), self.grad.data(), m, k, nn);
      }
    };
  }
  return DiffArray(n);
}

DiffArray matmul_nt(const DiffArray& a, const DiffArray& b) {
  if (a.ndim() != 2 || b.ndim() != 2 || a.dim(1) != b.dim(1)) {
    throw ShapeError("matmul_nt: " + shape_str(a.shape()) + " * " + shape_str(b.shape()) + "^T");
  }
  const int m = a.dim(0), k = a.dim(1), nn = b.dim(0);
  std::vector<double> y(static_cast<std::size_t>(m) * nn);
  kern::matmul_nt(y.data(), a.values().data(), b.values().data(), m, k, nn);
  auto n = make_node({m, nn}, std::move(y), {a.node(), b.node()});
  if (n->needs_grad) {
    n->backward_fn = [m, k, nn](Node& self) {
      Node& pa = *self.parents[0];
      Node& pb = *self.parents[1];
      if (pa.needs_grad) {
        detail::ensure_grad(pa);
        // dA += dY * B
        kern::acc_nn(pa.grad.data(), self.grad.data(), pb.values.data(), m, nn, k);
      }
      if (pb.needs_grad) {
        detail::ensure_grad(pb);
        // dB += dY^T * A
        kern::acc_tn(pb.grad.data(), self.grad.data(), pa.values.data(), m, nn, k);
      }
    };
  }
  return DiffArray(n);
}

// ---------------------------------------------------------------------------
// nonlinearities
// ---------------------------------------------------------------------------

DiffArray softmax(const DiffArray& x) {
  check_finite(x.values(), "softmax");
  int rows = 0, cols = 0;
  rows_cols(x, rows, cols, "softmax");
  std::vector<double> y(x.size());
  kern::softmax_rows(y.data(), x.values().data(), rows, cols);
  auto n = make_node(x.shape(), std::move(y), {x.node()});
  if (n->needs_grad) {
    n->backward_fn = [rows, cols](Node& self) {
      Node& p = *self.parents[0];
      detail::ensure_grad(p);
      for (int r = 0; r < rows; ++r) {
        const double* yr = self.values.data() + static_cast<std::size_t>(r) * cols;
        const double* gr = self.grad.data() + static_cast<std::size_t>(r) * cols;
        double dot = 0.0;
        for (int c = 0; c < cols; ++c) dot += gr[c] * yr[c];
        double* pr = p.grad.data() + static_cast<std::size_t>(r) * cols;
        for (int c = 0; c < cols; ++c) pr[c] += yr[c] * (gr[c] - dot);
      }
    };
  }
  return DiffArray(n);
}

DiffArray log_softmax(const DiffArray& x) {
  check_finite(x.values(), "log_softmax");
  int rows = 0, cols = 0;
  rows_cols(x, rows, cols, "log_softmax");
  std::vector<double> y(x.size());
  for (int r = 0; r < rows; ++r) {
    const double* xr = x.values().data() + static_cast<std::size_t>(r) * cols;
    double* yr = y.data() + static_cast<std::size_t>(r) * cols;
    double mx = xr[0];
    for (int c = 1; c < cols; ++c) mx = std::max(mx, xr[c]);
    double sum = 0.0;
    for (int c = 0; c < cols; ++c) sum += std::exp(xr[c] - mx);
    const double lse = mx + std::log(sum);
    for (int c = 0; c < cols; ++c) yr[c] = xr[c] - lse;
  }
  auto n = make_node(x.shape(), std::move(y), {x.node()});
  if (n->needs_grad) {
    n->backward_fn = [rows, cols](Node& self) {
      Node& p = *self.parents[0];
      detail::ensure_grad(p);
      for (int r = 0; r < rows; ++r) {
        const double* yr = self.values.data() + static_cast<std::size_t>(r) * cols;
        const double* gr = self.grad.data() + static_cast<std::size_t>(r) * cols;
        double gsum = 0.0;
        for (int c = 0; c < cols; ++c) gsum += gr[c];
        double* pr = p.grad.data() + static_cast<std::size_t>(r) * cols;
        for (int c = 0; c < cols; ++c) pr[c] += gr[c] - std::exp(yr[c]) * gsum;
      }
    };
  }
  return DiffArray(n);
}

DiffArray causal_softmax(const DiffArray& scores) {
  if (scores.ndim() != 2 || scores.dim(0) != scores.dim(1)) {
    throw ShapeError("causal_softmax: expected square matrix, got " + shape_str(scores.shape()));
  }
  const int t = scores.dim(0);
  std::vector<double> y(scores.size(), 0.0);
  for (int i = 0; i < t; ++i) {
    const double* xr = scores.values().data() + static_cast<std::size_t>(i) * t;
    double* yr = y.data() + static_cast<std::size_t>(i) * t;
    double mx = xr[0];
    for (int j = 1; j <= i; ++j) mx = std::max(mx, xr[j]);
    double sum = 0.0;
    for (int j = 0; j <= i; ++j) {
      yr[j] = std::exp(xr[j] - mx);
      sum += yr[j];
    }
    const double inv = 1.0 / sum;
    for (int j = 0; j <= i; ++j) yr[j] *= inv;
  }
  auto n = make_node(scores.shape(), std::move(y), {scores.node()});
  if (n->needs_grad) {
    n->backward_fn = [t](Node& self) {
      Node& p = *self.parents[0];
      detail::ensure_grad(p);
      for (int i = 0; i < t; ++i) {
        const double* yr = self.values.data() + static_cast<std::size_t>(i) * t;
        const double* gr = self.grad.data() + static_cast<std::size_t>(i) * t;
        double dot = 0.0;
        for (int j = 0; j <= i; ++j) dot += gr[j] * yr[j];
        double* pr = p.grad.data() + static_cast<std::size_t>(i) * t;
        for (int j = 0; j <= i; ++j) pr[j] += yr[j] * (gr[j] - dot);
      }
    };
  }
  return DiffArray(n);
}

DiffArray gelu(const DiffArray& x) {
  check_finite(x.values(), "gelu");
  std::vector<double> y(x.size());
  kern::gelu(y.data(), x.values().data(), x.size());
  auto n = make_node(x.shape(), std::move(y), {x.node()});
  if (n->needs_grad) {
    n->backward_fn = [](Node& self) {
      Node& p = *self.parents[0];
      detail::ensure_grad(p);
      kern::gelu_grad_acc(p.grad.data(), self.grad.data(), p.values.data(), self.grad.size());
    };
  }
  return DiffArray(n);
}

DiffArray tanh_op(const DiffArray& x) {
  std::vector<double> y(x.size());
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = std::tanh(x.values()[i]);
  auto n = make_node(x.shape(), std::move(y), {x.node()});
  if (n->needs_grad) {
    n->backward_fn = [](Node& self) {
      Node& p = *self.parents[0];
      detail::ensure_grad(p);
      for (std::size_t i = 0; i < self.grad.size(); ++i) {
        p.grad[i] += self.grad[i] * (1.0 - self.values[i] * self.values[i]);
      }
    };
  }
  return DiffArray(n);
}

// ---------------------------------------------------------------------------
// reductions / shape ops
// ---------------------------------------------------------------------------

DiffArray mean_pool_time(const DiffArray& x) {
  if (x.ndim() != 2) throw ShapeError("mean_pool_time: expected T x d, got " + shape_str(x.shape()));
  const int t = x.dim(0), d = x.dim(1);
  if (t < 1) throw InvalidInputError("mean_pool_time: empty time axis");
  std::vector<double> y(static_cast<std::size_t>(d), 0.0);
  for (int r = 0; r < t; ++r)
    for (int c = 0; c < d; ++c) y[c] += x.values()[static_cast<std::size_t>(r) * d + c];
  const double inv = 1.0 / static_cast<double>(t);
  for (int c = 0; c < d; ++c) y[c] *= inv;
  auto n = make_node({d}, std::move(y), {x.node()});
  if (n->needs_grad) {
    n->backward_fn = [t, d, inv](Node& self) {
      Node& p = *self.parents[0];
      detail::ensure_grad(p);
      for (int r = 0; r < t; ++r)
        for (int c = 0; c < d; ++c)
          p.grad[static_cast<std::size_t>(r) * d + c] += self.grad[c] * inv;
    };
  }
  return DiffArray(n);
}

DiffArray concat_features(const std::vector<DiffArray>& parts) {
  if (parts.empty()) throw InvalidInputError("concat_features: no parts");
  const int t = parts[0].ndim() == 2 ? parts[0].dim(0) : -1;
  if (t < 0) throw ShapeError("concat_features: parts must be 2-D");
  int total = 0;
  std::vector<std::shared_ptr<Node>> parents;
  for (const auto& p : parts) {
    if (p.ndim() != 2 || p.dim(0) != t) {
      throw ShapeError("concat_features: time length mismatch, expected " + std::to_string(t) +
                       " rows, got " + shape_str(p.shape()));
    }
    total += p.dim(1);
    parents.push_back(p.node());
  }
  std::vector<double> y(static_cast<std::size_t>(t) * total);
  int off = 0;
  for (const auto& p : parts) {
    const int d = p.dim(1);
    for (int r = 0; r < t; ++r)
      for (int c = 0; c < d; ++c)
        y[static_cast<std::size_t>(r) * total + off + c] =
            p.values()[static_cast<std::size_t>(r) * d + c];
    off += d;
  }
  auto n = make_node({t, total}, std::move(y), std::move(parents));
  if (n->needs_grad) {
    n->backward_fn = [t, total](Node& self) {
      int off = 0;
      for (auto& pp : self.parents) {
        Node& p = *pp;
        const int d = p.shape[1];
        if (p.needs_grad) {
          detail::ensure_grad(p);
          for (int r = 0; r < t; ++r)
            for (int c = 0; c < d; ++c)
              p.grad[static_cast<std::size_t>(r) * d + c] +=
                  self.grad[static_cast<std::size_t>(r) * total + off + c];
        }
        off += d;
      }
    };
  }
  return DiffArray(n);
}

DiffArray slice_cols(const DiffArray& x, int start, int len) {
  if (x.ndim() != 2) throw ShapeError("slice_cols: expected 2-D");
  const int t = x.dim(0), d = x.dim(1);
  if (start < 0 || len <= 0 || start + len > d) {
    throw ShapeError("slice_cols: [" + std::to_string(start) + ", " + std::to_string(start + len) +
                     ") out of " + std::to_string(d) + " columns");
  }
  std::vector<double> y(static_cast<std::size_t>(t) * len);
  for (int r = 0; r < t; ++r)
    for (int c = 0; c < len; ++c)
      y[static_cast<std::size_t>(r) * len + c] =
          x.values()[static_cast<std::size_t>(r) * d + start + c];
  auto n = make_node({t, len}, std::move(y), {x.node()});
  if (n->needs_grad) {
    n->backward_fn = [t, d, start, len](Node& self) {
      Node& p = *self.parents[0];
      detail::ensure_grad(p);
      for (int r = 0; r < t; ++r)
        for (int c = 0; c < len; ++c)
          p.grad[static_cast<std::size_t>(r) * d + start + c] +=
              self.grad[static_cast<std::size_t>(r) * len + c];
    };
  }
  return DiffArray(n);
}

DiffArray concat_rows(const DiffArray& a, const DiffArray& b) {
  if (a.ndim() != 2 || b.ndim() != 2 || a.dim(1) != b.dim(1)) {
    throw ShapeError("concat_rows: " + shape_str(a.shape()) + " vs " + shape_str(b.shape()));
  }
  const int ta = a.dim(0), tb = b.dim(0), d = a.dim(1);
  std::vector<double> y;
  y.reserve(a.size() + b.size());
  y.insert(y.end(), a.values().begin(), a.values().end());
  y.insert(y.end(), b.values().begin(), b.values().end());
  auto n = make_node({ta + tb, d}, std::move(y), {a.node(), b.node()});
  if (n->needs_grad) {
    n->backward_fn = [](Node& self) {
      Node& pa = *self.parents[0];
      Node& pb = *self.parents[1];
      const std::size_t na = pa.values.size();
      if (pa.needs_grad) {
        detail::ensure_grad(pa);
        for (std::size_t i = 0; i < na; ++i) pa.grad[i] += self.grad[i];
      }
      if (pb.needs_grad) {
        detail::ensure_grad(pb);
        for (std::size_t i = 0; i < pb.values.size(); ++i) pb.grad[i] += self.grad[na + i];
      }
    };
  }
  return DiffArray(n);
}

DiffArray stack_frames(const DiffArray& x, int k) {
  if (k <= 0) throw ConfigError("stack_frames: stack factor must be >= 1");
  if (x.ndim() != 2) throw ShapeError("stack_frames: expected T x d");
  const int t = x.dim(0), d = x.dim(1);
  const int out_t = (t + k - 1) / k;
  const int out_d = k * d;
  std::vector<double> y(static_cast<std::size_t>(out_t) * out_d, 0.0);
  for (int r = 0; r < t; ++r) {
    const int orow = r / k;
    const int slot = r % k;
    for (int c = 0; c < d; ++c)
      y[static_cast<std::size_t>(orow) * out_d + slot * d + c] =
          x.values()[static_cast<std::size_t>(r) * d + c];
  }
  auto n = make_node({out_t, out_d}, std::move(y), {x.node()});
  if (n->needs_grad) {
    n->backward_fn = [t, d, k, out_d](Node& self) {
      Node& p = *self.parents[0];
      detail::ensure_grad(p);
      for (int r = 0; r < t; ++r) {
        const int orow = r / k;
        const int slot = r % k;
        for (int c = 0; c < d; ++c)
          p.grad[static_cast<std::size_t>(r) * d + c] +=
              self.grad[static_cast<std::size_t>(orow) * out_d + slot * d + c];
      }
    };
  }
  return DiffArray(n);
}

DiffArray reshape(const DiffArray& x, Shape shape) {
  check_positive_shape(shape);
  if (shape_size(shape) != x.size()) {
    throw ShapeError("reshape: " + shape_str(x.shape()) + " to " + shape_str(shape));
  }
  auto n = make_node(std::move(shape), x.values(), {x.node()});
  if (n->needs_grad) {
    n->backward_fn = [](Node& self) {
      Node& p = *self.parents[0];
      detail::ensure_grad(p);
      for (std::size_t i = 0; i < self.grad.size(); ++i) p.grad[i] += self.grad[i];
    };
  }
  return DiffArray(n);
}

DiffArray embedding_rows(const DiffArray& table, const std::vector<int>& ids) {
  if (table.ndim() != 2) throw ShapeError("embedding_rows: table must be V x d");
  const int v = table.dim(0), d = table.dim(1);
  if (ids.empty()) throw InvalidInputError("embedding_rows: no ids");
  for (int id : ids) {
    if (id < 0 || id >= v) {
      throw InvalidInputError("embedding_rows: id " + std::to_string(id) + " outside vocab " +
                              std::to_string(v));
    }
  }
  const int t = static_cast<int>(ids.size());
  std::vector<double> y(static_cast<std::size_t>(t) * d);
  for (int r = 0; r < t; ++r)
    for (int c = 0; c < d; ++c)
      y[static_cast<std::size_t>(r) * d + c] =
          table.values()[static_cast<std::size_t>(ids[r]) * d + c];
  auto n = make_node({t, d}, std::move(y), {table.node()});
  if (n->needs_grad) {
    n->backward_fn = [ids, d](Node& self) {
      Node& p = *self.parents[0];
      detail::ensure_grad(p);
      for (std::size_t r = 0; r < ids.size(); ++r)
        for (int c = 0; c < d; ++c)
          p.grad[static_cast<std::size_t>(ids[r]) * d + c] += self.grad[r * d + c];
    };
  }
  return DiffArray(n);
}

DiffArray layer_norm(const DiffArray& x, const DiffArray& gamma, const DiffArray& beta,
                     double eps) {
  if (x.ndim() != 2) throw ShapeError("layer_norm: expected 2-D input");
  const int rows = x.dim(0), cols = x.dim(1);
  if (gamma.ndim() != 1 || gamma.dim(0) != cols || beta.ndim() != 1 || beta.dim(0) != cols) {
    throw ShapeError("layer_norm: gamma/beta must have length " + std::to_string(cols));
  }
  std::vector<double> y(x.size());
  std::vector<double> xhat(x.size());
  std::vector<double> inv_std(static_cast<std::size_t>(rows));
  for (int r = 0; r < rows; ++r) {
    const double* xr = x.values().data() + static_cast<std::size_t>(r) * cols;
    double mean = 0.0;
    for (int c = 0; c < cols; ++c) mean += xr[c];
    mean /= cols;
    double var = 0.0;
    for (int c = 0; c < cols; ++c) var += (xr[c] - mean) * (xr[c] - mean);
    var /= cols;
    const double istd = 1.0 / std::sqrt(var + eps);
    inv_std[static_cast<std::size_t>(r)] = istd;
    for (int c = 0; c < cols; ++c) {
      const std::size_t i = static_cast<std::size_t>(r) * cols + c;
      xhat[i] = (xr[c] - mean) * istd;
      y[i] = gamma.values()[c] * xhat[i] + beta.values()[c];
    }
  }
  auto n = make_node(x.shape(), std::move(y), {x.node(), gamma.node(), beta.node()});
  if (n->needs_grad) {
    n->backward_fn = [rows, cols, xhat = std::move(xhat), inv_std = std::move(inv_std)](Node& self) {
      Node& px = *self.parents[0];
      Node& pg = *self.parents[1];
      Node& pb = *self.parents[2];
      if (pg.needs_grad) detail::ensure_grad(pg);
      if (pb.needs_grad) detail::ensure_grad(pb);
      if (px.needs_grad) detail::ensure_grad(px);
      for (int r = 0; r < rows; ++r) {
        const std::size_t base = static_cast<std::size_t>(r) * cols;
        const double* gr = self.grad.data() + base;
        if (pg.needs_grad || pb.needs_grad) {
          for (int c = 0; c < cols; ++c) {
            if (pg.needs_grad) pg.grad[c] += gr[c] * xhat[base + c];
            if (pb.needs_grad) pb.grad[c] += gr[c];
          }
        }
        if (px.needs_grad) {
          double sum_dxh = 0.0, sum_dxh_xh = 0.0;
          for (int c = 0; c < cols; ++c) {
            const double dxh = gr[c] * pg.values[c];
            sum_dxh += dxh;
            sum_dxh_xh += dxh * xhat[base + c];
          }
          const double istd = inv_std[static_cast<std::size_t>(r)];
          for (int c = 0; c < cols; ++c) {
            const double dxh = gr[c] * pg.values[c];
            px.grad[base + c] +=
                istd * (dxh - sum_dxh / cols - xhat[base + c] * sum_dxh_xh / cols);
          }
        }
      }
    };
  }
  return DiffArray(n);
}

// ---------------------------------------------------------------------------
// scalars / losses
// ---------------------------------------------------------------------------

DiffArray entropy_op(const DiffArray& p) {
  if (p.ndim() != 1 || p.dim(0) < 1) throw ShapeError("entropy: expected a vector");
  double sum = 0.0;
  for (double v : p.values()) {
    if (!(v >= 0.0)) throw DistributionError("entropy: negative or NaN entry");
    sum += v;
  }
  if (std::abs(sum - 1.0) > 1e-9) {
    throw DistributionError("entropy: probabilities sum to " + std::to_string(sum));
  }
  double h = 0.0;
  for (double v : p.values()) {
    if (v > 0.0) h -= v * std::log(v);
  }
  auto n = make_node({1}, {h}, {p.node()});
  if (n->needs_grad) {
    n->backward_fn = [](Node& self) {
      Node& p0 = *self.parents[0];
      detail::ensure_grad(p0);
      const double g = self.grad[0];
      for (std::size_t i = 0; i < p0.values.size(); ++i) {
        const double v = p0.values[i];
        if (v > 0.0) p0.grad[i] += g * (-(std::log(v) + 1.0));
      }
    };
  }
  return DiffArray(n);
}

DiffArray picked_nll_mean(const DiffArray& logits, const std::vector<int>& rows,
                          const std::vector<int>& labels) {
  if (logits.ndim() != 2) throw ShapeError("picked_nll_mean: logits must be L x V");
  if (rows.size() != labels.size()) throw ShapeError("picked_nll_mean: rows/labels mismatch");
  if (rows.empty()) throw InvalidInputError("picked_nll_mean: no positions to score");
  const int l = logits.dim(0), v = logits.dim(1);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i] < 0 || rows[i] >= l || labels[i] < 0 || labels[i] >= v) {
      throw InvalidInputError("picked_nll_mean: position or label out of range");
    }
  }
  // Cache per-picked-row softmax for the backward pass.
  const std::size_t npick = rows.size();
  std::vector<double> probs(npick * static_cast<std::size_t>(v));
  double total = 0.0;
  for (std::size_t i = 0; i < npick; ++i) {
    const double* xr = logits.values().data() + static_cast<std::size_t>(rows[i]) * v;
    double* pr = probs.data() + i * static_cast<std::size_t>(v);
    double mx = xr[0];
    for (int c = 1; c < v; ++c) mx = std::max(mx, xr[c]);
    double sum = 0.0;
    for (int c = 0; c < v; ++c) {
      pr[c] = std::exp(xr[c] - mx);
      sum += pr[c];
    }
    const double inv = 1.0 / sum;
    for (int c = 0; c < v; ++c) pr[c] *= inv;
    total += -(xr[labels[i]] - mx - std::log(sum));
  }
  total /= static_cast<double>(npick);
  auto n = make_node({1}, {total}, {logits.node()});
  if (n->needs_grad) {
    n->backward_fn = [rows, labels, v, probs = std::move(probs)](Node& self) {
      Node& p = *self.parents[0];
      detail::ensure_grad(p);
      const double g = self.grad[0] / static_cast<double>(rows.size());
      for (std::size_t i = 0; i < rows.size(); ++i) {
        const double* pr = probs.data() + i * static_cast<std::size_t>(v);
        double* dst = p.grad.data() + static_cast<std::size_t>(rows[i]) * v;
        for (int c = 0; c < v; ++c) dst[c] += g * pr[c];
        dst[labels[i]] -= g;
      }
    };
  }
  return DiffArray(n);
}

DiffArray mean_scalars(const std::vector<DiffArray>& xs) {
  if (xs.empty()) throw InvalidInputError("mean_scalars: empty list");
  double sum = 0.0;
  std::vector<std::shared_ptr<Node>> parents;
  for (const auto& x : xs) {
    if (x.size() != 1) throw ShapeError("mean_scalars: all inputs must be scalars");
    sum += x.values()[0];
    parents.push_back(x.node());
  }
  const double inv = 1.0 / static_cast<double>(xs.size());
  auto n = make_node({1}, {sum * inv}, std::move(parents));
  if (n->needs_grad) {
    n->backward_fn = [inv](Node& self) {
      for (auto& pp : self.parents) {
        if (!pp->needs_grad) continue;
        detail::ensure_grad(*pp);
        pp->grad[0] += self.grad[0] * inv;
      }
    };
  }
  return DiffArray(n);
}

DiffArray weighted_sum_st(const DiffArray& soft, const std::vector<double>& forward_weights,
                          const std::vector<DiffArray>& experts) {
  if (soft.ndim() != 1) throw ShapeError("weighted_sum_st: weights must be a vector");
  const int m = soft.dim(0);
  if (static_cast<int>(experts.size()) != m ||
      static_cast<int>(forward_weights.size()) != m) {
    throw ShapeError("weighted_sum_st: expected " + std::to_string(m) + " experts/weights");
  }
  const Shape& es = experts[0].shape();
  for (const auto& e : experts) {
    if (e.shape() != es) {
      throw ShapeError("weighted_sum_st: expert shape mismatch " + shape_str(e.shape()) + " vs " +
                       shape_str(es));
    }
  }
  std::vector<double> y(experts[0].size(), 0.0);
  for (int k = 0; k < m; ++k) {
    const double w = forward_weights[static_cast<std::size_t>(k)];
    if (w == 0.0) continue;
    const auto& ev = experts[static_cast<std::size_t>(k)].values();
    if (w == 1.0) {
      // Bit-exact copy of the chosen expert under one-hot weights.
      for (std::size_t i = 0; i < y.size(); ++i) y[i] += ev[i];
    } else {
      for (std::size_t i = 0; i < y.size(); ++i) y[i] += w * ev[i];
    }
  }
  std::vector<std::shared_ptr<Node>> parents;
  parents.push_back(soft.node());
  for (const auto& e : experts) parents.push_back(e.node());
  auto n = make_node(es, std::move(y), std::move(parents));
  if (n->needs_grad) {
    n->backward_fn = [m](Node& self) {
      Node& ps = *self.parents[0];
      if (ps.needs_grad) {
        detail::ensure_grad(ps);
        for (int k = 0; k < m; ++k) {
          const Node& e = *self.parents[static_cast<std::size_t>(k) + 1];
          double dot = 0.0;
          for (std::size_t i = 0; i < self.grad.size(); ++i) dot += self.grad[i] * e.values[i];
          ps.grad[static_cast<std::size_t>(k)] += dot;
        }
      }
      for (int k = 0; k < m; ++k) {
        Node& e = *self.parents[static_cast<std::size_t>(k) + 1];
        if (!e.needs_grad) continue;
        detail::ensure_grad(e);
        const double w = ps.values[static_cast<std::size_t>(k)];
        for (std::size_t i = 0; i < self.grad.size(); ++i) e.grad[i] += self.grad[i] * w;
      }
    };
  }
  return DiffArray(n);
}

}  // namespace wee
