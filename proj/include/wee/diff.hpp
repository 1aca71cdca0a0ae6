#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "wee/errors.hpp"

namespace wee {

using Shape = std::vector<int>;

std::size_t shape_size(const Shape& s);
std::string shape_str(const Shape& s);

namespace detail {

struct Node {
  Shape shape;
  std::vector<double> values;
  std::vector<double> grad;  // allocated on demand during backward
  bool requires_grad = false;
  bool needs_grad = false;  // requires_grad, or downstream of such a node
  std::vector<std::shared_ptr<Node>> parents;
  // Adds this node's contribution into parents' grads.
  std::function<void(Node&)> backward_fn;
};

void ensure_grad(Node& n);

}  // namespace detail

// Dense 64-bit float array participating in a dynamically recorded operation
// graph. Copying a DiffArray copies the handle, not the data; the graph is
// rebuilt on every step. Recording and backward are single-threaded; values
// may be read concurrently between steps.
class DiffArray {
 public:
  DiffArray() = default;

  static DiffArray constant(Shape shape, std::vector<double> values);
  static DiffArray param(Shape shape, std::vector<double> values);
  static DiffArray zeros(Shape shape, bool requires_grad = false);

  bool defined() const { return static_cast<bool>(n_); }
  const Shape& shape() const { return n_->shape; }
  int ndim() const { return static_cast<int>(n_->shape.size()); }
  int dim(int i) const { return n_->shape[static_cast<std::size_t>(i)]; }
  std::size_t size() const { return n_->values.size(); }

  const std::vector<double>& values() const { return n_->values; }
  std::vector<double>& values_mut() { return n_->values; }
  bool requires_grad() const { return n_->requires_grad; }
  bool has_grad() const { return !n_->grad.empty(); }
  const std::vector<double>& grad() const;
  void zero_grad() { n_->grad.clear(); }

  // Value of a one-element array.
  double scalar() const;

  // Reverse pass from a scalar: accumulates grads on every reachable node
  // that needs them (the seed node's own grad becomes 1).
  void backward();

  std::shared_ptr<detail::Node> node() const { return n_; }
  explicit DiffArray(std::shared_ptr<detail::Node> n) : n_(std::move(n)) {}

 private:
  std::shared_ptr<detail::Node> n_;
};

// ---- elementwise / arithmetic ----
DiffArray add(const DiffArray& a, const DiffArray& b);
DiffArray sub(const DiffArray& a, const DiffArray& b);
DiffArray mul(const DiffArray& a, const DiffArray& b);
DiffArray neg(const DiffArray& a);
DiffArray mul_scalar(const DiffArray& a, double s);
// y[r, :] = a[r, :] + v  (bias broadcast over rows)
DiffArray add_rowvec(const DiffArray& a, const DiffArray& v);

// ---- linear algebra ----
// a: m x k, b: k x n
DiffArray matmul(const DiffArray& a, const DiffArray& b);
// a: m x k, b: n x k; returns a * b^T (m x n)
DiffArray matmul_nt(const DiffArray& a, const DiffArray& b);

// ---- nonlinearities ----
// Softmax over the last axis (1-D vector or 2-D rows); max-subtracted.
DiffArray softmax(const DiffArray& x);
DiffArray log_softmax(const DiffArray& x);
// Row-wise softmax of a T x T score matrix restricted to columns j <= i;
// entries above the diagonal are exactly zero and receive no gradient.
DiffArray causal_softmax(const DiffArray& scores);
// Exact-erf GELU: x * Phi(x).
DiffArray gelu(const DiffArray& x);
DiffArray tanh_op(const DiffArray& x);

// ---- reductions / shape ops ----
// Arithmetic mean over axis 0 of a T x d map (also serves as batch-mean of
// row distributions).
DiffArray mean_pool_time(const DiffArray& x);
// Feature-axis concatenation of T x d_j maps, in the given order.
DiffArray concat_features(const std::vector<DiffArray>& parts);
DiffArray slice_cols(const DiffArray& x, int start, int len);
DiffArray concat_rows(const DiffArray& a, const DiffArray& b);
// Stacks k consecutive rows into one row of width k*d; the trailing partial
// stack is zero-padded. T x d -> ceil(T/k) x (k*d).
DiffArray stack_frames(const DiffArray& x, int k);
// Same values in row-major order under a new shape.
DiffArray reshape(const DiffArray& x, Shape shape);
// Rows of `table` selected by ids.
DiffArray embedding_rows(const DiffArray& table, const std::vector<int>& ids);
DiffArray layer_norm(const DiffArray& x, const DiffArray& gamma, const DiffArray& beta,
                     double eps = 1e-5);

// ---- scalars / losses ----
// Shannon entropy -sum p ln p of a probability vector (0 ln 0 = 0).
// Rejects negative entries and sums off 1 by more than 1e-9.
DiffArray entropy_op(const DiffArray& p);
// Mean of -log softmax(logits[row])[label] over the given (row, label) pairs.
DiffArray picked_nll_mean(const DiffArray& logits, const std::vector<int>& rows,
                          const std::vector<int>& labels);
DiffArray mean_scalars(const std::vector<DiffArray>& xs);

// Forward = hard-weighted sum of the expert maps (exactly the chosen map when
// `weights_hard` is one-hot); backward treats the output as the soft-weighted
// sum, so gradients reach the soft weights and all experts.
DiffArray weighted_sum_st(const DiffArray& soft, const std::vector<double>& forward_weights,
                          const std::vector<DiffArray>& experts);

}  // namespace wee
